//! bicure: simulate, fit, and summarize bivariate cure frailty-copula
//! models from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data parse error,
//! 4 non-convergence, 5 study marked unreliable.

use bicure::cure::solve_cells;
use bicure::data::{read_retinopathy_csv, BivariateDataset};
use bicure::datagen::{generate, GeneratedData, SimDesign};
use bicure::dependence::dependence_report;
use bicure::error::Error;
use bicure::estimate::{
    fit_all_regimes, fit_regime, lrt_r_equals_one, CopulaKind, FitConfig, FitReport, RegimeKind,
};
use bicure::study::{run_study, StudyReport, StudySpec};
use bicure::survival::{
    average_cure_fractions, marginal_survival_population, ModelParams,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;
const EXIT_UNRELIABLE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "bicure",
    about = "Bivariate cure frailty-copula models: simulation, estimation, dependence summaries",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelFlag {
    Indep,
    Gumbel,
    Fgm,
}

impl ModelFlag {
    fn kind(self) -> CopulaKind {
        match self {
            ModelFlag::Indep => CopulaKind::Independence,
            ModelFlag::Gumbel => CopulaKind::Gumbel,
            ModelFlag::Fgm => CopulaKind::Fgm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeFlag {
    Eq1,
    Lt1,
    Gt1,
    Inf,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a design file
    Simulate(SimulateArgs),
    /// Fit the model to a dataset CSV
    Fit(FitArgs),
    /// Population rank-correlation report for fitted or given parameters
    Dep(DepArgs),
    /// Run a Monte Carlo study from a specification file
    Study(StudyArgs),
    /// Fitted marginal survival curves on a time grid
    Curves(CurvesArgs),
    /// EM versus direct-optimization comparison
    EmCompare(EmCompareArgs),
    /// Convert the per-eye retinopathy export into the dataset format
    PrepRetinopathy(PrepArgs),
    /// Likelihood ratio test of cure independence (R = 1)
    Lrt(LrtArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation design (JSON)
    #[arg(long)]
    design: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Override the design sample size
    #[arg(long)]
    n: Option<usize>,
    /// Override the design seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelFlag,
    #[arg(long, value_enum)]
    regime: RegimeFlag,
    /// Use the covariate columns of the dataset in the cure component
    #[arg(long)]
    covariates: bool,
    /// Multi-start count
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 0x0b1c)]
    seed: u64,
    /// Write the fit report (JSON) here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DepArgs {
    /// Model parameters (JSON), margins-based
    #[arg(long, conflicts_with = "fit_report")]
    params: Option<PathBuf>,
    /// A fit report produced by `bicure fit`
    #[arg(long)]
    fit_report: Option<PathBuf>,
    /// Dataset CSV, required to average covariate cure fractions
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study specification (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Output prefix; writes <prefix>.json and <prefix>.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Override the test level
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the design sample size
    #[arg(long)]
    n: Option<usize>,
    /// Override the design base seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CurvesArgs {
    /// A fit report produced by `bicure fit`
    #[arg(long)]
    fit_report: PathBuf,
    /// Dataset CSV, required to average covariate cure fractions
    #[arg(long)]
    data: Option<PathBuf>,
    /// Time grid lo:hi:count
    #[arg(long, default_value = "0:10:101")]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmCompareArgs {
    /// Simulation design (JSON); must be Gumbel with R = 1
    #[arg(long)]
    design: PathBuf,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepArgs {
    /// Per-eye export with columns id,laser,age,eye,trt,risk,time,status
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LrtArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelFlag,
    #[arg(long)]
    covariates: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 0x0b1c)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } => EXIT_PARSE,
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        Error::Io(_) => EXIT_PARSE,
        _ => EXIT_CONFIG,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid {what} file {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_dataset(path: &Path, covariates: bool) -> Result<BivariateDataset, Error> {
    let data = BivariateDataset::read_csv_file(path)?;
    if covariates && !data.has_covariates() {
        return Err(Error::Config(format!(
            "--covariates requested but {} has no covariate columns",
            path.display()
        )));
    }
    if covariates {
        Ok(data)
    } else {
        // drop covariate columns so the margins model applies
        let rows = data
            .rows()
            .iter()
            .map(|r| bicure::data::Observation::uncovariate(r.t1, r.t2, r.d1, r.d2))
            .collect();
        BivariateDataset::new(rows, vec![], vec![])
    }
}

fn print_fit_table(report: &FitReport) {
    println!("{:<12} {:>12} {:>12} {:>26}", "parameter", "estimate", "se", "95% CI");
    for est in &report.estimates {
        let se = est.se.map_or("-".to_string(), |s| format!("{s:.4}"));
        let ci = est
            .ci
            .map_or("-".to_string(), |(lo, hi)| format!("[{lo:.4}, {hi:.4}]"));
        println!("{:<12} {:>12.4} {:>12} {:>26}", est.name, est.estimate, se, ci);
    }
    println!(
        "loglik {:.3}  AIC {:.3}  BIC {:.3}  n {}  params {}  converged {}",
        report.loglik, report.aic, report.bic, report.n_obs, report.n_params, report.converged
    );
    if let Some(table) = &report.regime_table {
        println!("{:<6} {:>12} {:>12} {:>12} {:>7}", "regime", "loglik", "AIC", "BIC", "#par");
        for row in table {
            match &row.error {
                Some(err) => println!("{:<6} failed: {err}", row.regime),
                None => println!(
                    "{:<6} {:>12.3} {:>12.3} {:>12.3} {:>7}",
                    row.regime, row.loglik, row.aic, row.bic, row.n_params
                ),
            }
        }
    }
    for note in &report.notes {
        println!("note: {note}");
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("grid must be lo:hi:count, got `{spec}`")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Error::Config("invalid grid lo".into()))?;
    let hi: f64 = parts[1].parse().map_err(|_| Error::Config("invalid grid hi".into()))?;
    let count: usize = parts[2].parse().map_err(|_| Error::Config("invalid grid count".into()))?;
    if !(hi > lo && count >= 2) {
        return Err(Error::Config("grid needs hi > lo and count >= 2".into()));
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, Error> {
    let mut design: SimDesign = read_json(&args.design, "design")?;
    if let Some(n) = args.n {
        design.n = n;
    }
    if let Some(seed) = args.seed {
        design.seed = seed;
    }
    match generate(&design)? {
        GeneratedData::Censored(data) => data.write_csv_file(&args.out)?,
        GeneratedData::CureTruth(data) => data.write_csv_file(&args.out)?,
    }
    println!("wrote {} rows to {}", design.n, args.out.display());
    Ok(0)
}

fn cmd_fit(args: FitArgs) -> Result<u8, Error> {
    let data = load_dataset(&args.data, args.covariates)?;
    let config = FitConfig { starts: args.starts, seed: args.seed, ..FitConfig::default() };
    let report = match args.regime {
        RegimeFlag::All => fit_all_regimes(args.model.kind(), &data, &config)?,
        flag => {
            let regime = match flag {
                RegimeFlag::Eq1 => RegimeKind::Eq1,
                RegimeFlag::Lt1 => RegimeKind::Lt1,
                RegimeFlag::Gt1 => RegimeKind::Gt1,
                RegimeFlag::Inf => RegimeKind::Inf,
                RegimeFlag::All => unreachable!(),
            };
            fit_regime(args.model.kind(), regime, &data, &config)?
        }
    };
    print_fit_table(&report);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(if report.converged { 0 } else { EXIT_NONCONVERGENCE })
}

fn cmd_dep(args: DepArgs) -> Result<u8, Error> {
    let (params, n_obs_data): (ModelParams, Option<BivariateDataset>) =
        match (&args.params, &args.fit_report) {
            (Some(path), None) => (read_json(path, "parameter")?, None),
            (None, Some(path)) => {
                let report: FitReport = read_json(path, "fit report")?;
                let data = match &args.data {
                    Some(p) => Some(BivariateDataset::read_csv_file(p)?),
                    None => None,
                };
                (report.params, data)
            }
            _ => {
                return Err(Error::Config(
                    "provide exactly one of --params or --fit-report".into(),
                ))
            }
        };
    let (p1, p2) = average_cure_fractions(&params, n_obs_data.as_ref())?;
    let cells = solve_cells(p1, p2, params.regime)?;
    let report = dependence_report(params.copula, params.frailty.variance, &cells)?;
    println!(
        "tau_00 {:.4}  rho_00 {:.4}  tau_b {:.4}  rho_b {:.4}",
        report.tau_00, report.rho_00, report.tau_b, report.rho_b
    );
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Config(format!("serialization failed: {e}")))?
        );
    }
    Ok(0)
}

fn cmd_study(args: StudyArgs) -> Result<u8, Error> {
    let mut spec: StudySpec = read_json(&args.spec, "study spec")?;
    if let Some(reps) = args.reps {
        spec.replications = reps;
    }
    if let Some(alpha) = args.alpha {
        spec.alpha = alpha;
    }
    if let Some(n) = args.n {
        spec.design.n = n;
    }
    if let Some(seed) = args.seed {
        spec.design.seed = seed;
    }
    let report = run_study(&spec)?;
    let out = args
        .out
        .clone()
        .or_else(|| spec.output_path.as_ref().map(PathBuf::from));
    match &out {
        Some(prefix) => {
            let json_path = prefix.with_extension("json");
            let csv_path = prefix.with_extension("csv");
            write_json(&json_path, &report)?;
            std::fs::write(&csv_path, report.to_csv())?;
            println!("wrote {} and {}", json_path.display(), csv_path.display());
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Config(format!("serialization failed: {e}")))?
        ),
    }
    let meta = report.meta();
    if meta.unreliable {
        eprintln!(
            "study unreliable: {} of {} replications failed",
            meta.failed, meta.replications
        );
        return Ok(EXIT_UNRELIABLE);
    }
    Ok(0)
}

fn cmd_curves(args: CurvesArgs) -> Result<u8, Error> {
    let report: FitReport = read_json(&args.fit_report, "fit report")?;
    let data = match &args.data {
        Some(p) => Some(BivariateDataset::read_csv_file(p)?),
        None => None,
    };
    let params = &report.params;
    let (p1, p2) = average_cure_fractions(params, data.as_ref())?;
    let grid = parse_grid(&args.grid)?;
    let mut out = String::from("t,surv1,surv2,cure1,cure2\n");
    for t in grid {
        let s1 = marginal_survival_population(p1, &params.margin1, &params.frailty, t);
        let s2 = marginal_survival_population(p2, &params.margin2, &params.frailty, t);
        out.push_str(&format!("{t},{s1},{s2},{p1},{p2}\n"));
    }
    std::fs::write(&args.out, out)?;
    println!("wrote curve data to {} (cure fractions {:.3}, {:.3})", args.out.display(), p1, p2);
    Ok(0)
}

fn cmd_em_compare(args: EmCompareArgs) -> Result<u8, Error> {
    let mut design: SimDesign = read_json(&args.design, "design")?;
    if let Some(n) = args.n {
        design.n = n;
    }
    if let Some(seed) = args.seed {
        design.seed = seed;
    }
    let spec = StudySpec {
        study: bicure::study::StudyKind::EmCompare,
        design,
        replications: args.reps,
        alpha: 0.05,
        r_grid: vec![],
        fit_starts: 4,
        em_starts: 2,
        output_path: None,
    };
    let report = run_study(&spec)?;
    if let StudyReport::EmCompare(r) = &report {
        println!(
            "max |loglik_EM - loglik_direct| = {:.6} over {} replications",
            r.max_abs_loglik_diff, r.meta.used
        );
        println!(
            "median EM iterations {:.0}; median wall time EM {:.1} ms vs direct {:.1} ms",
            r.median_em_iterations, r.median_em_ms, r.median_direct_ms
        );
    }
    match &args.out {
        Some(out) => write_json(out, &report)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Config(format!("serialization failed: {e}")))?
        ),
    }
    if report.meta().unreliable {
        return Ok(EXIT_UNRELIABLE);
    }
    Ok(0)
}

fn cmd_prep(args: PrepArgs) -> Result<u8, Error> {
    let data = read_retinopathy_csv(&args.raw)?;
    data.write_csv_file(&args.out)?;
    println!("wrote {} paired rows to {}", data.n(), args.out.display());
    Ok(0)
}

fn cmd_lrt(args: LrtArgs) -> Result<u8, Error> {
    let data = load_dataset(&args.data, args.covariates)?;
    let config = FitConfig { starts: args.starts, seed: args.seed, ..FitConfig::default() };
    let result = lrt_r_equals_one(args.model.kind(), &data, &config, args.alpha)?;
    println!(
        "lambda {:.4}  p {:.4}  alpha {}  reject {}  (best regime {})",
        result.lambda, result.p_value, result.alpha, result.reject, result.best_regime
    );
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Dep(args) => cmd_dep(args),
        Command::Study(args) => cmd_study(args),
        Command::Curves(args) => cmd_curves(args),
        Command::EmCompare(args) => cmd_em_compare(args),
        Command::PrepRetinopathy(args) => cmd_prep(args),
        Command::Lrt(args) => cmd_lrt(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
