mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condex::io::{read_curves, read_dataset, write_curves, write_responses};
use condex::sim::{
    fmt_float, generate_curves, generate_responses, run_asymptotic_suite, run_study,
    write_asymptotics, write_study_csvs,
};
use condex::{
    classify_situation_with, extract_slice, floor_count, q1, q2, select_heuristic, Curve, Dataset,
    Error, QuantileEstimate, Result, SelectionResult, DEFAULT_S1_THRESHOLD,
};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "condex",
    version,
    about = "Extreme conditional quantiles with functional covariates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the conditional quantile at one target curve.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Target order, repeatable.
        #[arg(long)]
        alpha: Vec<f64>,
        /// Identifier of the target curve.
        #[arg(long)]
        target: Option<String>,
        /// Curves CSV; overrides `data.curves`.
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Responses CSV; overrides `data.responses`.
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Replicated study on synthetic curves.
    Study {
        #[command(flatten)]
        common: Common,
        /// Target order, repeatable; overrides `study.alpha`.
        #[arg(long)]
        alpha: Vec<f64>,
    },
    /// Monte Carlo checks of the limit laws.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Suite to run, repeatable; overrides `validate.suites`.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Replace every two-sided tolerance by this fraction of the target.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Write the synthetic curves and one replication of responses.
    GenData {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Estimate { common, .. }
            | Command::Study { common, .. }
            | Command::Validate { common, .. }
            | Command::GenData { common } => common,
        }
    }
}

/// Exit status: 0 success, 1 failed check or estimation error, 2 usage or
/// configuration error, 3 I/O or parse error.
enum Failure {
    Checks,
    Err(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Err(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Parse { .. } => 3,
        _ => 1,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

fn out_dir(common: &Common, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: &Command) -> std::result::Result<(), Failure> {
    let cfg = RunConfig::load(command.common().config.as_deref())?;
    match command {
        Command::Estimate {
            common,
            alpha,
            target,
            curves,
            responses,
        } => estimate(
            common,
            &cfg,
            alpha,
            target.as_deref(),
            curves.as_deref(),
            responses.as_deref(),
        ),
        Command::Study { common, alpha } => study(common, &cfg, alpha),
        Command::Validate {
            common,
            suites,
            tolerance,
        } => validate(common, &cfg, suites, *tolerance),
        Command::GenData { common } => gen_data(common, &cfg).map_err(Failure::from),
    }
}

struct Row {
    target: String,
    alpha: f64,
    h: f64,
    k: Option<usize>,
    estimate: QuantileEstimate,
}

fn estimate(
    common: &Common,
    cfg: &RunConfig,
    alpha_flags: &[f64],
    target_flag: Option<&str>,
    curves_flag: Option<&Path>,
    responses_flag: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let alphas = cfg.estimate_alphas(alpha_flags)?;
    let weight = cfg.weight()?;
    let curves_path = curves_flag
        .or(cfg.data.curves.as_deref())
        .ok_or_else(|| Error::Config("estimate needs --curves or data.curves".into()))?;
    let responses_path = responses_flag
        .or(cfg.data.responses.as_deref())
        .ok_or_else(|| Error::Config("estimate needs --responses or data.responses".into()))?;
    let grid_spec = cfg.grid_spec()?;
    let s1_threshold = cfg.estimate.s1_threshold.unwrap_or(DEFAULT_S1_THRESHOLD);
    let ds = read_dataset(curves_path, responses_path)?;

    let target: Curve = match (
        target_flag.or(cfg.estimate.target.as_deref()),
        &cfg.estimate.target_curve,
    ) {
        (Some(id), _) => {
            let i = ds
                .position(id)
                .ok_or_else(|| Error::Config(format!("unknown target `{id}`")))?;
            ds.curves()[i].clone()
        }
        (None, Some(path)) => {
            let mut c = read_curves(path)?;
            if c.len() != 1 {
                return Err(Error::Config(format!(
                    "{}: expected exactly one target curve",
                    path.display()
                ))
                .into());
            }
            c.remove(0)
        }
        (None, None) => {
            return Err(
                Error::Config("estimate needs --target or estimate.target_curve".into()).into(),
            )
        }
    };

    let dir = out_dir(common, cfg)?;
    let mut rows = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        let (h, k) = match (cfg.estimate.h, cfg.estimate.k) {
            (Some(h), Some(k)) => (h, k),
            (h, k) => {
                let mut spec = grid_spec.clone();
                if let Some(h) = h {
                    spec.h_values = Some(vec![h]);
                }
                if let Some(k) = k {
                    spec.k_values = Some(vec![k]);
                }
                let grid = spec.resolve(&ds)?;
                let sel: SelectionResult = select_heuristic(&ds, alpha, &grid)?;
                let path = dir.join(format!("criterion_table_{}.csv", ai + 1));
                sel.write_csv(create(&path)?)?;
                (sel.h, sel.k)
            }
        };
        let slice = extract_slice(&ds, &target, h)?;
        let (mut estimate, k_used) = if floor_count(slice.m(), alpha) >= 1 {
            (q1(&slice, alpha)?, None)
        } else {
            (q2(&slice, alpha, k, &weight)?, Some(k))
        };
        estimate.situation = classify_situation_with(slice.m(), alpha, s1_threshold);
        rows.push(Row {
            target: target.label().to_string(),
            alpha,
            h,
            k: k_used,
            estimate,
        });
    }

    let path = dir.join("estimate.csv");
    let mut w = create(&path)?;
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    writeln!(
        w,
        "target,alpha,h,k,m,situation,estimator,gamma_hat,weight,estimate"
    )
    .map_err(io)?;
    for r in &rows {
        let ext = r.estimate.extrapolation.as_ref();
        let line = [
            r.target.clone(),
            fmt_float(r.alpha),
            fmt_float(r.h),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.estimate.m.to_string(),
            r.estimate.situation.name().to_string(),
            if ext.is_some() { "q2" } else { "q1" }.to_string(),
            ext.map(|e| fmt_float(e.gamma_hat)).unwrap_or_default(),
            ext.and_then(|e| e.weight)
                .map(|w| w.name().to_string())
                .unwrap_or_default(),
            fmt_float(r.estimate.value),
        ]
        .join(",");
        writeln!(w, "{line}").map_err(io)?;
        println!(
            "target={} alpha={} h={} k={} m={} situation={} estimator={} gamma_hat={} estimate={}",
            r.target,
            r.alpha,
            r.h,
            r.k.map_or("-".to_string(), |k| k.to_string()),
            r.estimate.m,
            r.estimate.situation.name(),
            if ext.is_some() { "q2" } else { "q1" },
            ext.map_or("-".to_string(), |e| e.gamma_hat.to_string()),
            r.estimate.value,
        );
    }
    w.flush().map_err(io)?;
    Ok(())
}

fn study(common: &Common, cfg: &RunConfig, alphas: &[f64]) -> std::result::Result<(), Failure> {
    let exp = cfg.experiment(common.seed, alphas)?;
    let dir = out_dir(common, cfg)?;
    let out = run_study(&exp)?;
    write_study_csvs(&out, &dir)?;
    for (r, reason) in &out.aborted {
        eprintln!("replication {r} aborted: {reason}");
    }
    let mut ok = true;
    for c in out.checks() {
        let alpha = c.alpha.map_or("-".to_string(), |a| a.to_string());
        println!(
            "{} {} alpha={} statistic={} threshold={}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            alpha,
            c.statistic,
            c.threshold
        );
        ok &= c.pass;
    }
    if out.failed() {
        eprintln!(
            "study failed: {} of {} replications aborted; outputs are partial",
            out.aborted.len(),
            exp.replications
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn validate(
    common: &Common,
    cfg: &RunConfig,
    suites: &[String],
    tolerance: Option<f64>,
) -> std::result::Result<(), Failure> {
    let mut suite = cfg.suite(common.seed, tolerance)?;
    if !suites.is_empty() {
        suite.claims = suites.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if suite.claims.is_empty() {
        return Err(Error::Config("no suite selected".into()).into());
    }
    let dir = out_dir(common, cfg)?;
    let rows = run_asymptotic_suite(&suite)?;
    write_asymptotics(&rows, create(&dir.join("asymptotics.csv"))?)?;
    for r in &rows {
        println!(
            "{} {} m={} statistic={} target={} tolerance={}",
            if r.pass { "PASS" } else { "FAIL" },
            r.claim,
            r.m,
            r.statistic,
            r.target,
            r.tolerance
        );
    }
    if rows.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn gen_data(common: &Common, cfg: &RunConfig) -> Result<()> {
    let exp = cfg.experiment(common.seed, &[])?;
    let dir = out_dir(common, cfg)?;
    let curves = generate_curves(exp.grid_len, exp.n_curves, exp.base_seed)?;
    let ds: Dataset = generate_responses(&curves, &exp.y_values(), exp.n_responses, exp.base_seed)?;
    write_curves(&curves, create(&dir.join("curves.csv"))?)?;
    write_responses(&ds, create(&dir.join("responses.csv"))?)?;
    println!(
        "wrote {} curves and {} responses to {}",
        curves.len(),
        curves.len() * exp.n_responses,
        dir.display()
    );
    Ok(())
}
