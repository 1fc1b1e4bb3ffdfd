use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mms_core::checkpoint::Checkpoint;
use mms_core::counts::Strategy;
use mms_core::driver::{self, DriverOptions, QueryKind, RunResult, TableRow};
use mms_core::prooflog::{Outcome, ProofLog};
use mms_core::propagation::{GTable, Mode};
use mms_core::replay::replay;
use mms_core::search::{BranchRule, Query, SearchConfig};

/// Exact verifier for nonnegative k-sum counts.
#[derive(Parser, Debug)]
#[command(name = "mms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute g(n, k), or check a single threshold with --t.
    ComputeG {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        t: Option<u64>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compute f(k) by scanning n upward.
    ComputeF {
        #[arg(long)]
        k: u64,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compute g_s(n, k), or check a single threshold with --t.
    ComputeGs {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        t: Option<u64>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Best two-value vector a^b (-b)^a with a + b = n.
    ScanTwoValue {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[command(flatten)]
        opts: Opts,
    },
    /// N_k; --csv writes every value from 2 to k.
    ComputeNk {
        #[arg(long)]
        k: u64,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check every step of a proof log (text, or JSON when the file ends in .json).
    ReplayProof {
        path: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Continue from a checkpoint.
    Resume {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Negative,
    Positive,
    Stochastic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Auto,
    Bfs,
    Incexc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BranchArg {
    MaxMin,
    FirstLex,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    #[arg(long, value_enum, default_value = "negative")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Consecutive failed random probes before stochastic propagation gives up.
    #[arg(long, default_value_t = 200)]
    sample_limit: u32,
    /// Seconds per stochastic propagation call.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    node_budget: Option<u64>,
    /// Seconds of search before giving up with a checkpoint.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "max-min")]
    branch_rule: BranchArg,
    /// Search k | n cases instead of using g = C(n-1, k-1).
    #[arg(long)]
    no_baranyai: bool,
    /// Proof log of the final search.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Also write the result JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

impl Opts {
    fn search(&self) -> Result<SearchConfig> {
        let mut c = SearchConfig::with_mode(match self.mode {
            ModeArg::Negative => Mode::Negative,
            ModeArg::Positive => Mode::Positive,
            ModeArg::Stochastic => Mode::Stochastic,
        });
        c.strategy = match self.strategy {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Incexc => Strategy::IncExc,
        };
        c.branch_rule = match self.branch_rule {
            BranchArg::MaxMin => BranchRule::MaxMin,
            BranchArg::FirstLex => BranchRule::FirstLex,
        };
        c.propagation.rng_seed = self.seed;
        c.propagation.sample_limit = self.sample_limit;
        c.propagation.time_limit = seconds(self.time_limit)?;
        c.node_budget = self.node_budget;
        c.time_budget = self.time_budget.map(seconds).transpose()?;
        if self.parallel == 0 {
            bail!("--parallel must be at least 1");
        }
        c.parallel = self.parallel;
        Ok(c)
    }

    fn driver(&self) -> Result<DriverOptions> {
        Ok(DriverOptions {
            search: self.search()?,
            baranyai: !self.no_baranyai,
            log_path: self.log.clone(),
            checkpoint_path: self.checkpoint.clone(),
        })
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid duration {s}"))
}

fn emit(result: &RunResult, opts: &Opts) -> Result<ExitCode> {
    let json = result.to_json();
    println!("{json}");
    if let Some(p) = &opts.json {
        std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &opts.csv {
        let rows: Vec<TableRow> = if result.rows.is_empty() { result.row().into_iter().collect() } else { result.rows.clone() };
        let mut out = format!("{}\n", TableRow::CSV_HEADER);
        for r in rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        std::fs::write(p, out).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(exit_for(result.verdict))
}

fn exit_for(o: Outcome) -> ExitCode {
    match o {
        Outcome::Indeterminate => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    }
}

fn check_nk(n: u64, k: u64) -> Result<()> {
    if k < 2 || n <= k {
        bail!("need n > k >= 2, got n={n}, k={k}");
    }
    Ok(())
}

fn threshold(n: u64, k: u64, t: u64, strong: bool, opts: &Opts) -> Result<ExitCode> {
    let query = Query { n: n as usize, k: k as usize, t, strong };
    let (result, _) = driver::verify(query, &GTable::default(), &opts.driver()?)?;
    emit(&result, opts)
}

fn load_log(path: &Path) -> Result<ProofLog> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let log = if path.extension().is_some_and(|e| e == "json") { ProofLog::from_json(&text)? } else { ProofLog::parse(&text)? };
    Ok(log)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ComputeG { n, k, t, opts } => {
            check_nk(n, k)?;
            match t {
                Some(t) => threshold(n, k, t, false, &opts),
                None => emit(&driver::compute_g(n, k, &GTable::default(), &opts.driver()?)?, &opts),
            }
        }
        Command::ComputeGs { n, k, t, opts } => {
            check_nk(n, k)?;
            match t {
                Some(t) => threshold(n, k, t, true, &opts),
                None => emit(&driver::compute_g_strong(n, k, &GTable::default(), &opts.driver()?)?, &opts),
            }
        }
        Command::ComputeF { k, opts } => {
            let mut table = GTable::default();
            let result = driver::compute_f(k, &mut table, &opts.driver()?)?;
            emit(&result, &opts)
        }
        Command::ScanTwoValue { n, k, opts } => {
            check_nk(n, k)?;
            let (s, (a, b)) = driver::scan_two_value(n, k)?;
            let mut r = RunResult::summary(QueryKind::TwoValue, Some(n), k, opts.seed);
            r.value = Some(s);
            r.example = Some(driver::descriptor(&driver::two_value_vector(a, b)));
            r.witness = Some(driver::two_value_vector(a, b));
            emit(&r, &opts)
        }
        Command::ComputeNk { k, opts } => {
            let nk = driver::compute_nk(k)?;
            if let Some(p) = &opts.csv {
                std::fs::write(p, driver::nk_csv(2..=k)?).with_context(|| format!("writing {}", p.display()))?;
            }
            let mut r = RunResult::summary(QueryKind::Nk, None, k, opts.seed);
            r.value = Some(nk);
            let opts = Opts { csv: None, ..opts };
            emit(&r, &opts)
        }
        Command::ReplayProof { path, opts } => {
            let log = load_log(&path)?;
            let report = replay(&log, None).with_context(|| format!("replaying {}", path.display()))?;
            let mut r = RunResult::summary(QueryKind::Verify, Some(log.header.n as u64), log.header.k as u64, log.header.seed);
            r.t = Some(log.header.t);
            r.verdict = report.result;
            r.nodes = report.nodes;
            r.proof_log = Some(path.display().to_string());
            if let Some((s, x)) = report.witness {
                r.value = Some(s);
                r.example = Some(driver::descriptor(&x));
                r.witness = Some(x);
            }
            eprintln!("replayed {} steps and {} programs", report.rounds, report.lp_solves);
            emit(&r, &opts)
        }
        Command::Resume { opts } => {
            let path = opts.resume.clone().context("--resume PATH is required")?;
            let ck = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
            let mut d = opts.driver()?;
            if d.checkpoint_path.is_none() {
                d.checkpoint_path = Some(path);
            }
            emit(&driver::resume(ck, &d)?, &opts)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
