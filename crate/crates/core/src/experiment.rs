//! Benchmark and sensitivity-sweep harnesses.
//!
//! Repetitions are independent jobs (each owns its RNG) and may run in
//! parallel; tables are assembled after sorting by (instance, algorithm, seed).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alns::{self, AlnsConfig, InsertStats};
use crate::baselines::eddbid;
use crate::error::ConfigError;
use crate::metrics::{acceleration_metrics, rpd, RunRecord};
use crate::model::Instance;
use crate::parallel::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Alns,
    /// ALNS with full-scan insertion.
    AlnsNoBrs,
    Eddbid,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alns => "alns",
            Algorithm::AlnsNoBrs => "alns-nobrs",
            Algorithm::Eddbid => "eddbid",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [Algorithm::Alns, Algorithm::AlnsNoBrs, Algorithm::Eddbid]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// A finished run with the insertion counters of ALNS runs.
#[derive(Debug, Clone)]
pub struct Run {
    pub record: RunRecord,
    pub distance: f64,
    pub tardiness: f64,
    pub insert_stats: Option<InsertStats>,
}

/// Runs one algorithm once.
pub fn run_one(inst: &Instance, algorithm: Algorithm, seed: u64, alns_cfg: &AlnsConfig) -> Result<Run, ConfigError> {
    let clock = std::time::Instant::now();
    let (schedule, iterations, stats, budget) = match algorithm {
        Algorithm::Eddbid => (eddbid(inst).1, 0, None, None),
        Algorithm::Alns | Algorithm::AlnsNoBrs => {
            let cfg = AlnsConfig {
                seed,
                use_brs: algorithm == Algorithm::Alns,
                log: false,
                ..alns_cfg.clone()
            };
            let r = alns::solve(inst, &cfg)?;
            (r.schedule, r.iterations, Some(r.insert_stats), cfg.budget_ms(inst))
        }
    };
    Ok(Run {
        record: RunRecord {
            instance: inst.name.clone(),
            algorithm: algorithm.name().into(),
            seed,
            objective: schedule.objective,
            iterations,
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
            budget_ms: budget,
            with_brs: algorithm == Algorithm::Alns,
        },
        distance: schedule.total_distance(),
        tardiness: schedule.total_tardiness(),
        insert_stats: stats,
    })
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub alns: AlnsConfig,
    pub exec: Execution,
}

/// Table row: one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpdRow {
    pub instance: String,
    pub algorithm: String,
    pub runs: usize,
    /// Best objective of all algorithms on this instance.
    pub reference: f64,
    pub best_objective: f64,
    pub mean_objective: f64,
    /// RPD of this algorithm's best objective.
    pub rpd_best: f64,
    /// Mean RPD over runs.
    pub rpd_mean: f64,
}

/// Table row: BRS on/off pairs on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelRow {
    pub instance: String,
    pub pairs: usize,
    pub iterations_brs: f64,
    pub iterations_full: f64,
    pub a_r: f64,
    pub g_ap: f64,
    /// Share of slot pairs pruned by BRS over all insertions, percent.
    pub i_pp: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub runs: Vec<Run>,
    pub rpd: Vec<RpdRow>,
    pub acceleration: Vec<AccelRow>,
}

pub fn bench(instances: &[Instance], cfg: &BenchConfig) -> Result<BenchOutput, ConfigError> {
    cfg.alns.validate()?;
    let jobs: Vec<(usize, Algorithm, u64)> = (0..instances.len())
        .flat_map(|i| cfg.algorithms.iter().flat_map(move |&a| cfg.seeds.iter().map(move |&s| (i, a, s))))
        .collect();
    let mut runs = parallel::map(cfg.exec, &jobs, |&(i, a, s)| run_one(&instances[i], a, s, &cfg.alns))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    runs.sort_by(|a, b| {
        (&a.record.instance, &a.record.algorithm, a.record.seed).cmp(&(&b.record.instance, &b.record.algorithm, b.record.seed))
    });
    let rpd = rpd_table(&runs);
    let acceleration = acceleration_table(&runs);
    Ok(BenchOutput { runs, rpd, acceleration })
}

fn reference_by_instance(runs: &[Run]) -> BTreeMap<&str, f64> {
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in runs {
        let e = best.entry(&r.record.instance).or_insert(f64::INFINITY);
        *e = e.min(r.record.objective);
    }
    best
}

pub fn rpd_table(runs: &[Run]) -> Vec<RpdRow> {
    let reference = reference_by_instance(runs);
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in runs {
        groups.entry((&r.record.instance, &r.record.algorithm)).or_default().push(r.record.objective);
    }
    groups
        .into_iter()
        .map(|((inst, alg), fs)| {
            let f_ref = reference[inst];
            let best = fs.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = fs.iter().sum::<f64>() / fs.len() as f64;
            // A zero reference makes RPD undefined; report NaN rather than fail.
            let r = |f: f64| rpd(f, f_ref).unwrap_or(f64::NAN);
            RpdRow {
                instance: inst.into(),
                algorithm: alg.into(),
                runs: fs.len(),
                reference: f_ref,
                best_objective: best,
                mean_objective: mean,
                rpd_best: r(best),
                rpd_mean: fs.iter().map(|&f| r(f)).sum::<f64>() / fs.len() as f64,
            }
        })
        .collect()
}

pub fn acceleration_table(runs: &[Run]) -> Vec<AccelRow> {
    let reference = reference_by_instance(runs);
    let mut pairs: BTreeMap<&str, Vec<(&Run, &Run)>> = BTreeMap::new();
    for a in runs.iter().filter(|r| r.record.algorithm == Algorithm::Alns.name()) {
        if let Some(o) = runs.iter().find(|o| {
            o.record.algorithm == Algorithm::AlnsNoBrs.name()
                && o.record.instance == a.record.instance
                && o.record.seed == a.record.seed
        }) {
            pairs.entry(&a.record.instance).or_default().push((a, o));
        }
    }
    pairs
        .into_iter()
        .filter_map(|(inst, ps)| {
            let metrics: Vec<_> = ps
                .iter()
                .filter_map(|(a, o)| acceleration_metrics(&a.record, &o.record, reference[inst]).ok())
                .collect();
            if metrics.is_empty() {
                return None;
            }
            let k = metrics.len() as f64;
            let mean = |f: &dyn Fn(&(&Run, &Run)) -> f64| ps.iter().map(f).sum::<f64>() / ps.len() as f64;
            let (pruned, total) = ps.iter().filter_map(|(a, _)| a.insert_stats).fold((0, 0), |(p, t), s| {
                (p + s.pairs_pruned, t + s.pairs_total)
            });
            Some(AccelRow {
                instance: inst.into(),
                pairs: metrics.len(),
                iterations_brs: mean(&|(a, _)| a.record.iterations as f64),
                iterations_full: mean(&|(_, o)| o.record.iterations as f64),
                a_r: metrics.iter().map(|m| m.a_r).sum::<f64>() / k,
                g_ap: metrics.iter().map(|m| m.g_ap).sum::<f64>() / k,
                i_pp: if total == 0 { 0.0 } else { pruned as f64 / total as f64 * 100.0 },
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub carriers: Vec<usize>,
    pub shuttles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub alns: AlnsConfig,
    pub exec: Execution,
}

impl SweepConfig {
    /// Five carrier levels by nine shuttle levels.
    pub fn standard_grid(seeds: Vec<u64>, alns: AlnsConfig) -> Self {
        SweepConfig {
            carriers: (2..=6).collect(),
            shuttles: (4..=12).collect(),
            seeds,
            alns,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub carriers: usize,
    pub shuttles: usize,
    pub runs: usize,
    pub mean_distance: f64,
    pub mean_tardiness: f64,
    pub mean_objective: f64,
}

/// ALNS on `base` resized to every fleet of the grid.
pub fn sweep(base: &Instance, cfg: &SweepConfig) -> Result<Vec<SweepRow>, ConfigError> {
    cfg.alns.validate()?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .carriers
        .iter()
        .flat_map(|&c| cfg.shuttles.iter().flat_map(move |&s| cfg.seeds.iter().map(move |&k| (c, s, k))))
        .collect();
    let runs = parallel::map(cfg.exec, &jobs, |&(c, s, seed)| {
        run_one(&base.with_fleet_size(c, s), Algorithm::Alns, seed, &cfg.alns).map(|r| ((c, s), r))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut cells: BTreeMap<(usize, usize), Vec<Run>> = BTreeMap::new();
    for (key, r) in runs {
        cells.entry(key).or_default().push(r);
    }
    Ok(cells
        .into_iter()
        .map(|((c, s), rs)| {
            let k = rs.len() as f64;
            SweepRow {
                carriers: c,
                shuttles: s,
                runs: rs.len(),
                mean_distance: rs.iter().map(|r| r.distance).sum::<f64>() / k,
                mean_tardiness: rs.iter().map(|r| r.tardiness).sum::<f64>() / k,
                mean_objective: rs.iter().map(|r| r.record.objective).sum::<f64>() / k,
            }
        })
        .collect())
}
