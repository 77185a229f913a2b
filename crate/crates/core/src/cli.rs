//! Batch command line: verification suites, adversarial searches, solves and
//! monitors. Every run writes `manifest.json` next to its outputs.
//!
//! Exit codes: 0 success, 1 violation / non-convergence / cone violation,
//! 2 invalid configuration.

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    adversarial_search, delta_prime_threshold, run_suite, write_jsonl, EstimateParams, Inequality, SearchConfig,
    Suite, SuiteConfig, SEARCH_TOL,
};
use crate::solver::{monitor, newton_solve, read_field, write_field, ProblemConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "HKLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hklab", version, about = "Complex Hessian estimate harness and solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Adversarial search for the worst slack of one inequality.
    Search(SearchArgs),
    /// Solve a configured problem.
    Solve(SolveArgs),
    /// Evaluate the test function and trace inequality on a field.
    Monitor(MonitorArgs),
}

/// Options shared by `verify` and `search`; flags override the JSON config.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// JSON file with any of the fields below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub mu: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "delta-prime")]
    pub delta_prime: Option<f64>,
    /// Adversarial restarts (search mode of `verify`, restarts of `search`).
    #[arg(long)]
    pub restarts: Option<usize>,
}

impl RunOptions {
    /// Flags on top of the config file.
    fn resolve(&self) -> Result<RunOptions> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<RunOptions>(&text).map_err(|e| Error::Config(e.to_string()))?
            }
            None => RunOptions::default(),
        };
        Ok(RunOptions {
            config: self.config.clone(),
            out: self.out.clone(),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            n: self.n.or(base.n),
            k: self.k.or(base.k),
            m: self.m.or(base.m),
            mu: self.mu.or(base.mu),
            delta: self.delta.or(base.delta),
            delta_prime: self.delta_prime.or(base.delta_prime),
            restarts: self.restarts.or(base.restarts),
        })
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (--seed or \"seed\" in the config)".into()))
    }

    fn params(&self) -> EstimateParams {
        let d = EstimateParams::default();
        EstimateParams {
            m: self.m.unwrap_or(d.m),
            mu: self.mu.unwrap_or(d.mu),
            delta: self.delta.unwrap_or(d.delta),
            delta_prime: self.delta_prime.unwrap_or(d.delta_prime),
            ..d
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("hklab-out"))
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// identities, lemma1, corollary17, lemma2, lemma3, subchecks or cascade.
    pub suite: String,
    #[command(flatten)]
    pub options: RunOptions,
    /// Replace random sampling by an adversarial search.
    #[arg(long)]
    pub search: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// lemma1, corollary17, lemma2_genesisi, lemma2_genesis2 or lemma3.
    pub inequality: String,
    #[command(flatten)]
    pub options: RunOptions,
    /// Log-bisect the gap ratio delta' of lemma3 over [lo, hi].
    #[arg(long)]
    pub bisect: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 8)]
    pub iterations: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// HKF1 field to evaluate; without it the configured problem is solved first.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Written next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    /// Effective parameters of the run.
    pub parameters: serde_json::Value,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

struct Run {
    out: PathBuf,
    started: Instant,
    outputs: Vec<String>,
}

impl Run {
    fn start(out: PathBuf) -> Result<Self> {
        fs::create_dir_all(&out)?;
        Ok(Self {
            out,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(self, command: &str, config: Option<&Path>, seed: Option<u64>, parameters: serde_json::Value) -> Result<()> {
        let manifest = RunManifest {
            command: command.into(),
            config_path: config.map(|p| p.display().to_string()),
            seed,
            outputs: self.outputs,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            parameters,
        };
        write_json(&self.out.join("manifest.json"), &manifest)
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let suite: Suite = args.suite.parse()?;
    let opts = args.options.resolve()?;
    let seed = opts.seed()?;
    let mut config = SuiteConfig::new(suite, opts.samples.unwrap_or(10_000), seed);
    config.n = opts.n;
    config.k = opts.k;
    config.mu = opts.mu;
    config.params = opts.params();
    if args.search {
        config.search_restarts = Some(opts.restarts.unwrap_or(64));
    }
    let outcome = run_suite(&config)?;
    let mut run = Run::start(opts.out_dir())?;
    write_json(&run.path("summary.json"), &outcome.summary)?;
    write_jsonl(BufWriter::new(fs::File::create(run.path("reports.jsonl"))?), &outcome.reports)?;
    if !outcome.measurements.is_empty() {
        write_json(&run.path("measurements.json"), &outcome.measurements)?;
    }
    println!("{}", serde_json::to_string(&outcome.summary)?);
    run.finish("verify", opts.config.as_deref(), Some(seed), serde_json::to_value(&config)?)?;
    if outcome.passed() {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "{}: {} violation(s), worst sample {} (normalized slack {:e}, tolerance {:e})",
            suite.name(),
            outcome.violation_count,
            outcome.summary.worst_sample_id,
            outcome.summary.min_slack,
            outcome.tolerance
        );
        Ok(EXIT_FAILURE)
    }
}

pub fn cmd_search(args: &SearchArgs) -> Result<i32> {
    let inequality: Inequality = args.inequality.parse()?;
    let opts = args.options.resolve()?;
    let seed = opts.seed()?;
    let config = SearchConfig::new(
        opts.n.unwrap_or(4),
        opts.k.unwrap_or(2),
        opts.restarts.unwrap_or(200),
        seed,
        opts.params(),
    );
    let mut run = Run::start(opts.out_dir())?;
    if args.bisect {
        if inequality != Inequality::Lemma3 {
            return Err(Error::Config("--bisect applies to lemma3 only".into()));
        }
        let t = delta_prime_threshold(&config, args.lo, args.hi, args.iterations)?;
        write_json(&run.path("threshold.json"), &t)?;
        println!("{}", serde_json::to_string(&serde_json::json!({
            "n": t.n, "k": t.k, "mu": t.mu, "delta": t.delta,
            "holds_up_to": t.holds_up_to, "fails_from": t.fails_from,
        }))?);
    } else {
        let worst = adversarial_search(inequality, &config)?;
        write_json(&run.path("search.json"), &worst)?;
        write_jsonl(BufWriter::new(fs::File::create(run.path("reports.jsonl"))?), std::slice::from_ref(&worst))?;
        println!(
            "{}",
            serde_json::to_string(&serde_json::json!({
                "inequality": inequality.name(),
                "restarts": config.restarts,
                "min_slack": worst.normalized(),
                "passes": worst.passes(SEARCH_TOL),
            }))?
        );
    }
    run.finish("search", opts.config.as_deref(), Some(seed), serde_json::to_value(&config)?)?;
    Ok(EXIT_OK)
}


pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let cfg = ProblemConfig::load(&args.config)?;
    let mut run = Run::start(args.out.clone().unwrap_or_else(|| PathBuf::from("hklab-out")))?;
    let outcome = cfg.build().and_then(|p| {
        let (u, mut report) = newton_solve(&p.u0, &p.chi, &p.rhs, p.k, &p.options)?;
        if let Some(e) = &p.exact {
            report.error_vs_exact = Some(u.max_abs_diff(&e.sample(p.grid)?)?);
        }
        Ok((u, report))
    });
    let code = match outcome {
        Ok((u, report)) => {
            write_field(&run.path("field.hkf"), &u)?;
            run.outputs.push("field.json".into());
            write_json(&run.path("report.json"), &report)?;
            fs::write(run.path("iterations.csv"), report.history_csv())?;
            println!(
                "{}",
                serde_json::to_string(&serde_json::json!({
                    "converged": report.converged,
                    "iterations": report.iterations,
                    "final_residual_inf": report.final_residual_inf,
                    "error_vs_exact": report.error_vs_exact,
                }))?
            );
            if report.converged {
                EXIT_OK
            } else {
                eprintln!("newton did not converge: {:?}", report.termination);
                EXIT_FAILURE
            }
        }
        Err(e @ (Error::ConeViolation { .. } | Error::Precondition(_))) => {
            eprintln!("{e}");
            write_json(&run.path("report.json"), &serde_json::json!({ "error": e.to_string() }))?;
            EXIT_FAILURE
        }
        Err(e) => return Err(e),
    };
    run.finish("solve", Some(&args.config), Some(cfg.seed), serde_json::to_value(&cfg)?)?;
    Ok(code)
}

pub fn cmd_monitor(args: &MonitorArgs) -> Result<i32> {
    let cfg = ProblemConfig::load(&args.config)?;
    let mut run = Run::start(args.out.clone().unwrap_or_else(|| PathBuf::from("hklab-out")))?;
    let field = match &args.field {
        Some(path) => {
            let u = read_field(path)?;
            if u.grid().n() != cfg.n {
                return Err(Error::Config(format!("field has n = {}, config has n = {}", u.grid().n(), cfg.n)));
            }
            Ok(u)
        }
        None => cfg
            .build()
            .and_then(|p| newton_solve(&p.u0, &p.chi, &p.rhs, p.k, &p.options).map(|(u, _)| u)),
    };
    let outcome = field.and_then(|u| monitor(&u, &cfg.chi, cfg.k, &cfg.monitor_params()));
    let code = match outcome {
        Ok(rep) => {
            write_json(&run.path("monitor.json"), &rep)?;
            println!("{}", serde_json::to_string(&rep)?);
            if rep.trace_margin_holds() {
                EXIT_OK
            } else {
                eprintln!("trace inequality margin {:e} below tolerance", rep.trace_margin_min);
                EXIT_FAILURE
            }
        }
        Err(e @ (Error::ConeViolation { .. } | Error::Precondition(_))) => {
            eprintln!("{e}");
            write_json(&run.path("monitor.json"), &serde_json::json!({ "error": e.to_string() }))?;
            EXIT_FAILURE
        }
        Err(e) => return Err(e),
    };
    run.finish("monitor", Some(&args.config), Some(cfg.seed), serde_json::to_value(&cfg)?)?;
    Ok(code)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize = v
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Search(a) => cmd_search(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Monitor(a) => cmd_monitor(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ConeViolation { .. } | Error::Sampling(_) => EXIT_FAILURE,
                _ => EXIT_INVALID,
            }
        }
    }
}
