//! `ahasp`: solve, verify, benchmark and sweep carrier/shuttle schedules.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 size-limit error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahasp_core::alns::{self, AlnsConfig, Budget};
use ahasp_core::baselines::{brute_force, eddbid, export_milp, BruteLimits};
use ahasp_core::error::{ConfigError, IoError, SizeError};
use ahasp_core::experiment::{bench, sweep, Algorithm, BenchConfig, SweepConfig};
use ahasp_core::generate::{generate, GenSpec};
use ahasp_core::io::{load_instance, save_instance, write_csv, SolutionFile, SolverMeta};
use ahasp_core::parallel::Execution;
use ahasp_core::Instance;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ahasp", version, about = "Deadlock-free scheduling of attachable carrier/shuttle AGVs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance and write a solution file.
    Solve(SolveArgs),
    /// Re-decode a solution file and compare it with what it claims.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Exact optimum by enumeration (tiny instances only).
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_tasks: usize,
        #[arg(long, default_value_t = 3)]
        max_agvs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Earliest-due-date bidding dispatch.
    Baseline {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the mixed-integer model in LP format.
    ExportMilp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Big-M constant; derived from the instance when omitted.
        #[arg(long)]
        big_l: Option<f64>,
    },
    /// Seeded repetitions across algorithms; writes runs, RPD and acceleration tables.
    Bench(BenchArgs),
    /// Fleet-size grid on one instance; writes mean distance and tardiness per cell.
    Sweep(SweepArgs),
    /// Generate a synthetic corridor instance.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        carriers: usize,
        #[arg(long, default_value_t = 8)]
        shuttles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        tightness: f64,
        #[arg(long, default_value_t = 8)]
        chambers: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall budget in milliseconds; default is zeta * n^2 * (m+ + m-).
    #[arg(long, conflicts_with = "iterations")]
    budget_ms: Option<u64>,
    /// Fixed iteration count instead of a wall budget (deterministic).
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    no_brs: bool,
    #[arg(long, default_value_t = 20.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.3)]
    phi: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 15)]
    kappa: usize,
    #[arg(long, default_value_t = 0.3)]
    psi: f64,
    #[arg(long, default_value_t = 10.0)]
    zeta: f64,
}

impl SearchArgs {
    fn config(&self) -> AlnsConfig {
        AlnsConfig {
            mu: self.mu,
            phi: self.phi,
            rho: self.rho,
            kappa: self.kappa,
            psi: self.psi,
            zeta: self.zeta,
            seed: self.seed,
            budget: match (self.budget_ms, self.iterations) {
                (_, Some(k)) => Budget::Iterations(k),
                (Some(ms), None) => Budget::WallMs(ms),
                (None, None) => Budget::Default,
            },
            use_brs: !self.no_brs,
            ..AlnsConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Alns,
    Eddbid,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Alns)]
    algo: Algo,
    #[command(flatten)]
    search: SearchArgs,
    /// Solution file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Operator statistics CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files.
    #[arg(long, num_args = 1.., required = true)]
    instances: Vec<PathBuf>,
    /// Repetitions per algorithm and instance (seeds 0..R).
    #[arg(long, default_value_t = 20)]
    repetitions: u64,
    /// Comma-separated: alns, alns-nobrs, eddbid.
    #[arg(long, value_delimiter = ',', default_value = "alns,eddbid")]
    algorithms: Vec<String>,
    /// Also run ALNS without BRS and emit the acceleration table.
    #[arg(long)]
    paired_no_brs: bool,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 20)]
    repetitions: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    carriers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8,9,10,11,12")]
    shuttles: Vec<usize>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        *code
    } else if err.chain().any(|e| e.is::<SizeError>()) {
        3
    } else if err.chain().any(|e| e.is::<ConfigError>()) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn instance(path: &Path) -> Result<Instance> {
    match load_instance(path) {
        Err(e @ IoError::Read { .. }) => Err(e.into()),
        r => r.with_context(|| format!("in {}", path.display())),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct OperatorRow {
    category: &'static str,
    operator: String,
    weight: f64,
    uses: u64,
    score: f64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Verify { instance: ip, solution } => {
            let inst = instance(&ip)?;
            let file = SolutionFile::load(&solution)?;
            let v = file.verify(&inst)?;
            if v.ok() {
                match v.objective {
                    Some(f) => println!("OK, objective matches (F = {f})"),
                    None => println!("OK, deadlocked chain reported as infeasible"),
                }
                Ok(())
            } else {
                Err(Exit(
                    2,
                    format!(
                        "mismatch: stored objective {:?}, recomputed {:?}, timings match: {}",
                        file.objective, v.objective, v.timings_match
                    ),
                )
                .into())
            }
        }
        Cmd::Oracle { instance: ip, max_tasks, max_agvs, out } => {
            let inst = instance(&ip)?;
            let r = brute_force(&inst, BruteLimits { max_tasks, max_agvs }, Execution::Parallel)?;
            println!("optimum {} over {} feasible chains", r.optimal_objective, r.enumerated);
            if let Some(out) = out {
                let s = ahasp_core::fdd(&inst, &r.optimal_chain)?;
                let meta = SolverMeta {
                    algorithm: "brute-force".into(),
                    ..SolverMeta::default()
                };
                SolutionFile::new(&inst, &r.optimal_chain, &s, meta).save(out)?;
            }
            Ok(())
        }
        Cmd::Baseline { instance: ip, out } => {
            let inst = instance(&ip)?;
            let (chain, s) = eddbid(&inst);
            println!("eddbid objective {}", s.objective);
            if let Some(out) = out {
                let meta = SolverMeta {
                    algorithm: "eddbid".into(),
                    ..SolverMeta::default()
                };
                SolutionFile::new(&inst, &chain, &s, meta).save(out)?;
            }
            Ok(())
        }
        Cmd::ExportMilp { instance: ip, out, big_l } => {
            let inst = instance(&ip)?;
            if let Some(l) = big_l {
                if !(l > 0.0) {
                    bail!(Exit(1, format!("--big-l must be positive, got {l}")));
                }
            }
            write_text(&out, &export_milp(&inst, big_l))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Bench(a) => run_bench(a),
        Cmd::Sweep(a) => run_sweep(a),
        Cmd::Generate {
            n,
            carriers,
            shuttles,
            seed,
            tightness,
            chambers,
            out,
        } => {
            if n == 0 || carriers == 0 || shuttles == 0 || chambers == 0 {
                bail!(Exit(1, "--n, --carriers, --shuttles and --chambers must be at least 1".into()));
            }
            if !(0.0..=1.0).contains(&tightness) {
                bail!(Exit(1, format!("--tightness must lie in [0, 1], got {tightness}")));
            }
            let spec = GenSpec {
                tightness,
                chambers_per_row: chambers,
                ..GenSpec::new(n, carriers, shuttles, seed)
            };
            save_instance(&generate(&spec)?, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = instance(&a.instance)?;
    match a.algo {
        Algo::Eddbid => {
            let (chain, s) = eddbid(&inst);
            let meta = SolverMeta {
                algorithm: "eddbid".into(),
                ..SolverMeta::default()
            };
            SolutionFile::new(&inst, &chain, &s, meta).save(&a.out)?;
            println!("eddbid objective {}", s.objective);
        }
        Algo::Alns => {
            let cfg = a.search.config();
            let r = alns::solve(&inst, &cfg)?;
            let meta = SolverMeta {
                algorithm: if cfg.use_brs { "alns" } else { "alns-nobrs" }.into(),
                seed: Some(cfg.seed),
                budget_ms: cfg.budget_ms(&inst),
                iterations: Some(r.iterations),
                elapsed_ms: Some(r.elapsed_ms),
            };
            SolutionFile::new(&inst, &r.chain, &r.schedule, meta).save(&a.out)?;
            if let Some(log) = &a.log {
                write_csv(log, &r.log)?;
            }
            if let Some(stats) = &a.stats {
                let mut rows: Vec<OperatorRow> = Vec::new();
                for (o, w) in &r.bank.removal.ops {
                    rows.push(OperatorRow {
                        category: "removal",
                        operator: o.to_string(),
                        weight: w.weight,
                        uses: w.total_uses,
                        score: w.total_score,
                    });
                }
                for (o, w) in &r.bank.insertion.ops {
                    rows.push(OperatorRow {
                        category: "insertion",
                        operator: o.to_string(),
                        weight: w.weight,
                        uses: w.total_uses,
                        score: w.total_score,
                    });
                }
                write_csv(stats, &rows)?;
            }
            println!(
                "alns objective {} (initial {}) after {} iterations in {:.0} ms",
                r.objective(),
                r.initial_objective,
                r.iterations,
                r.elapsed_ms
            );
        }
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let instances = a.instances.iter().map(|p| instance(p)).collect::<Result<Vec<_>>>()?;
    let mut algorithms = a
        .algorithms
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(|e| Exit(1, e)))
        .collect::<Result<Vec<_>, _>>()?;
    if a.paired_no_brs && !algorithms.contains(&Algorithm::AlnsNoBrs) {
        if !algorithms.contains(&Algorithm::Alns) {
            algorithms.push(Algorithm::Alns);
        }
        algorithms.push(Algorithm::AlnsNoBrs);
    }
    let cfg = BenchConfig {
        algorithms,
        seeds: (0..a.repetitions).collect(),
        alns: a.search.config(),
        exec: if a.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    let out = bench(&instances, &cfg)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let records: Vec<_> = out.runs.iter().map(|r| r.record.clone()).collect();
    write_csv(a.out_dir.join("runs.csv"), &records)?;
    write_csv(a.out_dir.join("rpd.csv"), &out.rpd)?;
    if !out.acceleration.is_empty() {
        write_csv(a.out_dir.join("acceleration.csv"), &out.acceleration)?;
    }
    for r in &out.rpd {
        println!("{:<24} {:<11} best RPD {:>7.2}  mean RPD {:>7.2}", r.instance, r.algorithm, r.rpd_best, r.rpd_mean);
    }
    for r in &out.acceleration {
        println!("{:<24} A_R {:>7.2}%  G_AP {:>6.2}  I_PP {:>6.2}%", r.instance, r.a_r, r.g_ap, r.i_pp);
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let base = instance(&a.instance)?;
    if a.carriers.contains(&0) || a.shuttles.contains(&0) {
        bail!(Exit(1, "fleet levels must be at least 1".into()));
    }
    let cfg = SweepConfig {
        carriers: a.carriers,
        shuttles: a.shuttles,
        seeds: (0..a.repetitions).collect(),
        alns: a.search.config(),
        exec: if a.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    let rows = sweep(&base, &cfg)?;
    write_csv(&a.out, &rows)?;
    println!("wrote {} cells to {}", rows.len(), a.out.display());
    Ok(())
}
