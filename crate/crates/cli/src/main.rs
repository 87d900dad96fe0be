//! `wkmsurv` command-line front end.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use wkmsurv::io::{fixture, fixture_path, read_csv_path, FIXTURES};
use wkmsurv::simulate::{
    equal_mean_q2, run_estimator_mse, run_power_experiment, run_sampling_distribution,
    run_type1_resample, weibull_mean, Experiment, Membership, MixtureSpec, SimulationResult,
    SimulationSpec, METHODS,
};
use wkmsurv::{
    gehan_wilcoxon, km_estimate, log_rank, theta_test_with, weighted_survival, Dataset, Error,
    Horizon, Population, StepFunction,
};

const SCHEMA_VERSION: &str = "1";

#[derive(Parser, Debug)]
#[command(
    name = "wkmsurv",
    version,
    about = "Prevalence-weighted survival curves and the Θ̂ two-population test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Weighted population curves and per-cohort Kaplan-Meier curves as plot data.
    Estimate(AnalysisArgs),
    /// Θ̂ statistic, variance, confidence interval and p-value.
    Test(TestArgs),
    /// Log-rank and Gehan-Wilcoxon tests between the two populations (cohorts ignored).
    Compare(AnalysisArgs),
    /// Monte-Carlo experiments.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// List bundled data sets and their paths.
    Fixtures,
}

#[derive(Args, Debug, Serialize, Clone)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// CSV file with columns time, censor (1 = censored), cohort, population.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Bundled data set instead of a file (see `fixtures`).
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    /// Tabular output; available for simulations only.
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct AnalysisArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum HorizonArg {
    /// Each cohort is integrated up to its own horizon.
    PerCohort,
    /// All cohorts are integrated up to the smallest cohort horizon.
    Common,
}

impl From<HorizonArg> for Horizon {
    fn from(h: HorizonArg) -> Self {
        match h {
            HorizonArg::PerCohort => Horizon::PerCohort,
            HorizonArg::Common => Horizon::Common,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = HorizonArg::PerCohort)]
    horizon: HorizonArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct RunArgs {
    #[arg(long, default_value_t = 20_240_917)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum MembershipArg {
    Binomial,
    Fixed,
}

impl From<MembershipArg> for Membership {
    fn from(m: MembershipArg) -> Self {
        match m {
            MembershipArg::Binomial => Membership::Binomial,
            MembershipArg::Fixed => Membership::Fixed,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct MixtureArgs {
    /// Rate of the homogeneous exponential population.
    #[arg(long, default_value_t = 0.25)]
    reference_rate: f64,
    /// Rate of the exponential component of the admixed population.
    #[arg(long, default_value_t = 0.2)]
    exp_rate: f64,
    #[arg(long, default_value_t = 5.0)]
    weibull_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    weibull_scale: f64,
    /// Administrative censoring time; none by default.
    #[arg(long)]
    censor_time: Option<f64>,
    #[arg(long, value_enum, default_value_t = MembershipArg::Binomial)]
    membership: MembershipArg,
}

impl MixtureArgs {
    fn spec(&self, q2: f64) -> MixtureSpec {
        MixtureSpec {
            q2,
            reference_rate: self.reference_rate,
            exp_rate: self.exp_rate,
            weibull_shape: self.weibull_shape,
            weibull_scale: self.weibull_scale,
            censor_time: self.censor_time,
            membership: self.membership.into(),
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum SimulateCommand {
    /// Rejection rates against an exponential/Weibull admixture.
    Power {
        /// Admixture weights; one experiment per value.
        #[arg(long, value_delimiter = ',', default_value = "0.25")]
        q2: Vec<f64>,
        /// Per-population sample sizes.
        #[arg(long, value_delimiter = ',', default_value = "100")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[command(flatten)]
        mixture: MixtureArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Type-I error by splitting random subsets of one population in half.
    Type1 {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1)]
        population: u8,
        #[arg(long, value_delimiter = ',', default_value = "40,80,136")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        replicates: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Null sampling distribution of Θ̂ at one subset size.
    Sampling {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1)]
        population: u8,
        #[arg(long, default_value_t = 60)]
        size: usize,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pointwise variance and MSE of the weighted estimator versus Kaplan-Meier.
    Mse {
        #[arg(long, default_value_t = 0.25)]
        q2: f64,
        #[arg(long, value_delimiter = ',', default_value = "50,200,1000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Evaluation times; defaults to 0.5, 1.0, ..., 10.0.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[command(flatten)]
        mixture: MixtureArgs,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn load(input: &InputArgs) -> Outcome<Dataset> {
    match (&input.input, &input.fixture) {
        (Some(path), None) => {
            let parsed = read_csv_path(path)?;
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            Ok(Dataset::validate(parsed.observations)?)
        }
        (None, Some(name)) => Ok(fixture(name)?),
        _ => Err(Failure::Usage(
            "exactly one of --input or --fixture is required".into(),
        )),
    }
}

fn population(label: u8) -> Outcome<Population> {
    Population::from_label(label)
        .ok_or_else(|| Failure::Usage(format!("population must be 1 or 2, got {label}")))
}

fn to_json(value: impl Serialize) -> Outcome<Value> {
    serde_json::to_value(value).map_err(|e| Failure::Usage(e.to_string()))
}

fn envelope(command: &Command, result: impl Serialize) -> Outcome<Value> {
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "config": to_json(command)?,
        "result": to_json(result)?,
    }))
}

fn emit(out: &OutputArgs, body: &str) -> Outcome<()> {
    match &out.output {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(body.as_bytes())?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json(out: &OutputArgs, value: &Value) -> Outcome<()> {
    if out.format != Format::Json {
        return Err(Failure::Usage("this command only produces JSON".into()));
    }
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

#[derive(Serialize)]
struct CurveRecord<'a> {
    population: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    cohort: Option<&'a str>,
    curve: StepFunction,
}

fn estimate(ds: &Dataset) -> Outcome<Value> {
    let mut weighted = Vec::new();
    let mut kaplan_meier = Vec::new();
    let mut cohorts = Vec::new();
    for pop in Population::BOTH {
        weighted.push(CurveRecord {
            population: pop.label(),
            cohort: None,
            curve: weighted_survival(ds, pop)?,
        });
        kaplan_meier.push(CurveRecord {
            population: pop.label(),
            cohort: None,
            curve: km_estimate(&ds.population_subjects(pop))?.surv,
        });
        for (z, label) in ds.cohorts().iter().enumerate() {
            cohorts.push(CurveRecord {
                population: pop.label(),
                cohort: Some(label),
                curve: km_estimate(ds.cell(pop, z)?)?.surv,
            });
        }
    }
    Ok(json!({
        "weighted": weighted,
        "kaplan_meier": kaplan_meier,
        "cohorts": cohorts,
    }))
}

fn compare(ds: &Dataset) -> Outcome<Value> {
    let g1 = ds.population_subjects(Population::One);
    let g2 = ds.population_subjects(Population::Two);
    Ok(json!({
        "log_rank": log_rank(&g1, &g2)?,
        "gehan_wilcoxon": gehan_wilcoxon(&g1, &g2)?,
    }))
}

fn default_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.5).collect()
}

fn simulate(cmd: &SimulateCommand) -> Outcome<Vec<SimulationResult>> {
    let spec = |experiment, sizes: Vec<usize>, replicates, run: &RunArgs| SimulationSpec {
        experiment,
        sizes,
        replicates,
        alpha: run.alpha,
        seed: run.seed,
    };
    Ok(match cmd {
        SimulateCommand::Power {
            q2,
            sizes,
            replicates,
            mixture,
            run,
        } => {
            let s = spec(Experiment::Power, sizes.clone(), *replicates, run);
            q2.iter()
                .map(|&q| {
                    Ok(SimulationResult::Power(run_power_experiment(
                        &s,
                        &mixture.spec(q),
                    )?))
                })
                .collect::<Outcome<Vec<_>>>()?
        }
        SimulateCommand::Type1 {
            input,
            population: pop,
            sizes,
            replicates,
            run,
        } => {
            let ds = load(input)?;
            let s = spec(Experiment::Type1Resample, sizes.clone(), *replicates, run);
            vec![SimulationResult::Type1Resample(run_type1_resample(
                &ds,
                population(*pop)?,
                &s,
            )?)]
        }
        SimulateCommand::Sampling {
            input,
            population: pop,
            size,
            replicates,
            run,
        } => {
            let ds = load(input)?;
            let s = spec(
                Experiment::SamplingDistribution,
                vec![*size],
                *replicates,
                run,
            );
            vec![SimulationResult::SamplingDistribution(
                run_sampling_distribution(&ds, population(*pop)?, &s)?,
            )]
        }
        SimulateCommand::Mse {
            q2,
            sizes,
            replicates,
            grid,
            mixture,
            run,
        } => {
            let grid = if grid.is_empty() {
                default_grid()
            } else {
                grid.clone()
            };
            let s = spec(Experiment::EstimatorMse, sizes.clone(), *replicates, run);
            vec![SimulationResult::EstimatorMse(run_estimator_mse(
                &s,
                &mixture.spec(*q2),
                &grid,
            )?)]
        }
    })
}

fn method_name(k: usize) -> String {
    serde_json::to_value(METHODS[k])
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Long-format CSV for a simulation result.
fn simulation_csv(results: &[SimulationResult]) -> String {
    let mut out = String::new();
    match results.first() {
        Some(SimulationResult::Power(_)) => {
            out.push_str("q2,n,method,successes,failures,rejections,rate,se\n")
        }
        Some(SimulationResult::Type1Resample(_)) => out.push_str("n,replicate,method,p_value\n"),
        Some(SimulationResult::SamplingDistribution(_)) => out.push_str("replicate,theta\n"),
        Some(SimulationResult::EstimatorMse(_)) => out.push_str(
            "n,t,truth,weighted_mean,weighted_variance,weighted_mse,km_mean,km_variance,km_mse\n",
        ),
        None => {}
    }
    for result in results {
        match result {
            SimulationResult::Power(p) => {
                for size in &p.sizes {
                    for r in &size.rates {
                        let method = serde_json::to_value(r.method).unwrap_or_default();
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            p.mixture.q2,
                            size.n,
                            method.as_str().unwrap_or_default(),
                            size.successes,
                            size.failures,
                            r.rejections,
                            r.rate,
                            r.se
                        ));
                    }
                }
            }
            SimulationResult::Type1Resample(t) => {
                for size in &t.sizes {
                    for (rep, ps) in size.p_values.iter().enumerate() {
                        for (k, p) in ps.iter().enumerate() {
                            out.push_str(&format!("{},{},{},{}\n", size.n, rep, method_name(k), p));
                        }
                    }
                }
            }
            SimulationResult::SamplingDistribution(s) => {
                for (rep, theta) in s.thetas.iter().enumerate() {
                    out.push_str(&format!("{rep},{theta}\n"));
                }
            }
            SimulationResult::EstimatorMse(m) => {
                for size in &m.sizes {
                    for (g, t) in m.grid.iter().enumerate() {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{}\n",
                            size.n,
                            t,
                            m.truth[g],
                            size.weighted.mean[g],
                            size.weighted.variance[g],
                            size.weighted.mse[g],
                            size.kaplan_meier.mean[g],
                            size.kaplan_meier.variance[g],
                            size.kaplan_meier.mse[g]
                        ));
                    }
                }
            }
        }
    }
    out
}

fn validate_alpha(alpha: f64) -> Outcome<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn run(command: &Command) -> Outcome<()> {
    match command {
        Command::Estimate(args) => {
            let ds = load(&args.input)?;
            emit_json(&args.out, &envelope(command, estimate(&ds)?)?)
        }
        Command::Test(args) => {
            validate_alpha(args.alpha)?;
            let ds = load(&args.input)?;
            let report = theta_test_with(&ds, args.alpha, args.horizon.into())?;
            emit_json(&args.out, &envelope(command, report)?)
        }
        Command::Compare(args) => {
            let ds = load(&args.input)?;
            emit_json(&args.out, &envelope(command, compare(&ds)?)?)
        }
        Command::Simulate(sim) => {
            let run_args = match sim {
                SimulateCommand::Power { run, .. }
                | SimulateCommand::Type1 { run, .. }
                | SimulateCommand::Sampling { run, .. }
                | SimulateCommand::Mse { run, .. } => run,
            };
            validate_alpha(run_args.alpha)?;
            let results = simulate(sim)?;
            match run_args.out.format {
                Format::Json => {
                    let mut value = envelope(command, &results)?;
                    if let SimulateCommand::Power { mixture: m, .. } = sim {
                        // Admixture weight at which both populations share a mean lifetime.
                        let q = equal_mean_q2(
                            1.0 / m.reference_rate,
                            1.0 / m.exp_rate,
                            weibull_mean(m.weibull_shape, m.weibull_scale),
                        );
                        value["equal_mean_q2"] = json!(q.ok());
                    }
                    emit_json(&run_args.out, &value)
                }
                Format::Csv => emit(&run_args.out, &simulation_csv(&results)),
            }
        }
        Command::Fixtures => {
            let mut stdout = io::stdout().lock();
            for name in FIXTURES {
                let path = fixture_path(name)
                    .map(|p| p.display().to_string())
                    .unwrap_or_default();
                writeln!(stdout, "{name}\t{path}")?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_statistical() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
