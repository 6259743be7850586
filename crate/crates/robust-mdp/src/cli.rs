//! Command-line front end: load or generate instances, run the solvers and
//! the verification suites, and write plot-ready logs.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure, 3 runtime
//! error. The `ROBUSTMDP_THREADS` environment variable caps internal
//! parallelism.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::evaluate_robust;
use crate::instances::{build_counterexample, build_example1, build_garnet, GarnetAmbiguity, InstanceBundle};
use crate::io;
use crate::mdp::{Policy, StateDist};
use crate::mirror::MirrorMap;
use crate::rtd::{rtd_evaluate, OperatorMode, RtdConfig};
use crate::solvers::{
    auto_schedule, pessimistic_constants, rpi_solve, rpmd_solve, rvi_solve, srpmd_solve,
    QEstimator, SolverConfig, StepsizeSchedule, DEFAULT_ETA_CAP,
};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "robustmdp", version, about = "Tabular robust MDP planning and learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a solver and write PREFIX.csv / PREFIX.json logs.
    Solve(SolveArgs),
    /// Robust evaluation of a fixed policy (values, Q-table, worst kernel).
    Evaluate(EvaluateArgs),
    /// Online robust TD evaluation; writes the error trace and the iterate.
    Rtd(RtdArgs),
    /// Run the numerical verification suites and print a pass/fail table.
    Verify(VerifyArgs),
    /// Generate an instance bundle and write it as JSON.
    Gen(GenArgs),
    /// Print mismatch-constant estimates for an instance.
    Constants(ConstantsArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Path to an instance bundle JSON file.
    #[arg(long, conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Generator spec: garnet:S,A,B | example1:K,EPS,P | counterexample:C,GAMMA.
    #[arg(long)]
    gen: Option<String>,
    /// Discount for generated garnet instances.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Ambiguity for generated garnet instances:
    /// singleton | contamination:EPS | l1ball:RADIUS.
    #[arg(long, default_value = "contamination:0.2")]
    ambiguity: String,
    /// Seed for generated garnet instances.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn load(&self) -> Result<InstanceBundle> {
        match (&self.instance, &self.gen) {
            (Some(path), None) => io::load_bundle(path),
            (None, Some(spec)) => generate(spec, self.gamma, &self.ambiguity, self.seed),
            _ => Err(Error::Invalid("exactly one of --instance or --gen is required".into())),
        }
    }
}

fn parse_ambiguity(text: &str) -> Result<GarnetAmbiguity> {
    if text == "singleton" {
        return Ok(GarnetAmbiguity::Singleton);
    }
    if let Some(rest) = text.strip_prefix("contamination:") {
        let eps: f64 =
            rest.parse().map_err(|_| Error::Invalid(format!("bad contamination level {rest:?}")))?;
        return Ok(GarnetAmbiguity::Contamination(eps));
    }
    if let Some(rest) = text.strip_prefix("l1ball:") {
        let radius: f64 =
            rest.parse().map_err(|_| Error::Invalid(format!("bad l1 radius {rest:?}")))?;
        return Ok(GarnetAmbiguity::L1Ball(radius));
    }
    Err(Error::Invalid(format!("unknown ambiguity {text:?}")))
}

fn parse_fields(spec: &str, name: &str, arity: usize) -> Result<Vec<String>> {
    let fields: Vec<String> = spec.split(',').map(|s| s.to_string()).collect();
    if fields.len() != arity {
        return Err(Error::Invalid(format!("{name} spec needs {arity} comma-separated fields")));
    }
    Ok(fields)
}

fn generate(spec: &str, gamma: f64, ambiguity: &str, seed: u64) -> Result<InstanceBundle> {
    if let Some(rest) = spec.strip_prefix("garnet:") {
        let f = parse_fields(rest, "garnet", 3)?;
        let parse = |s: &String| {
            s.parse::<usize>().map_err(|_| Error::Invalid(format!("bad garnet field {s:?}")))
        };
        return build_garnet(
            parse(&f[0])?,
            parse(&f[1])?,
            parse(&f[2])?,
            gamma,
            parse_ambiguity(ambiguity)?,
            seed,
        );
    }
    if let Some(rest) = spec.strip_prefix("example1:") {
        let f = parse_fields(rest, "example1", 3)?;
        let k: usize =
            f[0].parse().map_err(|_| Error::Invalid(format!("bad chain length {:?}", f[0])))?;
        let eps: f64 =
            f[1].parse().map_err(|_| Error::Invalid(format!("bad eps {:?}", f[1])))?;
        let p: f64 = f[2].parse().map_err(|_| Error::Invalid(format!("bad p {:?}", f[2])))?;
        return Ok(build_example1(k, eps, p).nominal);
    }
    if let Some(rest) = spec.strip_prefix("counterexample:") {
        let f = parse_fields(rest, "counterexample", 2)?;
        let c: f64 = f[0].parse().map_err(|_| Error::Invalid(format!("bad C {:?}", f[0])))?;
        let g: f64 = f[1].parse().map_err(|_| Error::Invalid(format!("bad gamma {:?}", f[1])))?;
        return Ok(build_counterexample(c, g).0);
    }
    Err(Error::Invalid(format!("unknown generator spec {spec:?}")))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Rpmd,
    Srpmd,
    Rpi,
    Rvi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MapArg {
    Kl,
    Euclidean,
}

impl From<MapArg> for MirrorMap {
    fn from(value: MapArg) -> Self {
        match value {
            MapArg::Kl => MirrorMap::Kl,
            MapArg::Euclidean => MirrorMap::Euclidean,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_enum, default_value = "kl")]
    map: MapArg,
    /// constant:ETA | geometric:ETA0,RATIO | auto
    #[arg(long, default_value = "auto")]
    schedule: String,
    /// uniform | path to a state-distribution JSON file.
    #[arg(long, default_value = "uniform")]
    rho: String,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    gap_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    eval_tol: f64,
    /// Synthetic noise level for srpmd.
    #[arg(long)]
    noise: Option<f64>,
    /// Online-evaluation settings for srpmd.
    #[arg(long)]
    rtd_alpha: Option<f64>,
    #[arg(long)]
    rtd_steps: Option<usize>,
    #[arg(long, value_enum, default_value = "known")]
    rtd_mode: ModeArg,
    /// Output prefix; writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Known,
    Contamination,
}

impl From<ModeArg> for OperatorMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Known => OperatorMode::KnownU,
            ModeArg::Contamination => OperatorMode::Contamination,
        }
    }
}

fn parse_rho(text: &str, n_states: usize) -> Result<StateDist> {
    if text == "uniform" {
        Ok(StateDist::uniform(n_states))
    } else {
        io::load_state_dist(Path::new(text))
    }
}

fn parse_schedule(
    text: &str,
    bundle: &InstanceBundle,
    rho: &StateDist,
) -> Result<StepsizeSchedule> {
    if text == "auto" {
        let reference = rvi_solve(&bundle.mdp, &bundle.spec, 1e-12)?;
        let (schedule, constants) =
            auto_schedule(&bundle.mdp, &bundle.spec, rho, Some(&reference.pi_star))?;
        eprintln!(
            "auto schedule: M = {:.6}, M' = {:.6}, ratio = {:.6} ({})",
            constants.m,
            constants.m_prime,
            constants.ratio,
            if constants.estimated { "sampled estimate" } else { "pessimistic bound" },
        );
        return Ok(schedule);
    }
    if let Some(rest) = text.strip_prefix("constant:") {
        let eta: f64 =
            rest.parse().map_err(|_| Error::Invalid(format!("bad constant stepsize {rest:?}")))?;
        return Ok(StepsizeSchedule::Constant { eta });
    }
    if let Some(rest) = text.strip_prefix("geometric:") {
        let f = parse_fields(rest, "geometric", 2)?;
        let eta0: f64 =
            f[0].parse().map_err(|_| Error::Invalid(format!("bad eta0 {:?}", f[0])))?;
        let ratio: f64 =
            f[1].parse().map_err(|_| Error::Invalid(format!("bad ratio {:?}", f[1])))?;
        return Ok(StepsizeSchedule::Geometric { eta0, ratio, eta_cap: DEFAULT_ETA_CAP });
    }
    Err(Error::Invalid(format!("unknown schedule {text:?}")))
}

fn run_solve(args: &SolveArgs) -> Result<()> {
    let bundle = args.instance.load()?;
    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    if matches!(args.algo, Algo::Rvi) {
        let sol = rvi_solve(&bundle.mdp, &bundle.spec, args.eval_tol)?;
        io::save_rvi(&json_path, &sol)?;
        std::fs::write(&csv_path, format!("{}\n", io::RUN_CSV_HEADER))?;
        println!("wrote {} and {}", csv_path.display(), json_path.display());
        return Ok(());
    }
    let rho = parse_rho(&args.rho, bundle.mdp.n_states)?;
    let schedule = parse_schedule(&args.schedule, &bundle, &rho)?;
    let estimator = match args.algo {
        Algo::Srpmd => Some(match (args.noise, args.rtd_alpha, args.rtd_steps) {
            (Some(e), None, None) => QEstimator::SyntheticNoise { e },
            (None, Some(alpha), Some(steps)) => {
                QEstimator::Rtd { alpha, steps, mode: args.rtd_mode.into() }
            }
            _ => {
                return Err(Error::Invalid(
                    "srpmd needs either --noise E or --rtd-alpha A with --rtd-steps T".into(),
                ))
            }
        }),
        _ => None,
    };
    let config = SolverConfig {
        schedule,
        map: args.map.into(),
        rho: Some(rho),
        max_iters: args.iters,
        gap_tol: args.gap_tol,
        eval_tol: args.eval_tol,
        seed: args.instance.seed,
        estimator,
        record_policies: false,
    };
    let log = match args.algo {
        Algo::Rpmd => rpmd_solve(&bundle.mdp, &bundle.spec, &config)?,
        Algo::Srpmd => srpmd_solve(&bundle.mdp, &bundle.spec, &config)?,
        Algo::Rpi => rpi_solve(&bundle.mdp, &bundle.spec, &config)?,
        Algo::Rvi => unreachable!(),
    };
    io::save_run_csv(&csv_path, &log)?;
    io::save_run_json(&json_path, &log)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// uniform | path to a policy JSON file.
    #[arg(long, default_value = "uniform")]
    policy: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let bundle = args.instance.load()?;
    let policy = if args.policy == "uniform" {
        Policy::uniform(bundle.mdp.n_states, bundle.mdp.n_actions)
    } else {
        io::load_policy(Path::new(&args.policy))?
    };
    let eval = evaluate_robust(&bundle.mdp, &bundle.spec, &policy, args.tol)?;
    let json_path = args.out.with_extension("json");
    io::save_evaluation(&json_path, &eval)?;
    println!("wrote {}", json_path.display());
    Ok(())
}

#[derive(Debug, Args)]
struct RtdArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "uniform")]
    policy: String,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    start_state: usize,
    #[arg(long, value_enum, default_value = "known")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1000)]
    trace_every: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run_rtd(args: &RtdArgs) -> Result<()> {
    let bundle = args.instance.load()?;
    let policy = if args.policy == "uniform" {
        Policy::uniform(bundle.mdp.n_states, bundle.mdp.n_actions)
    } else {
        io::load_policy(Path::new(&args.policy))?
    };
    let config = RtdConfig {
        alpha: args.alpha,
        steps: args.steps,
        seed: args.instance.seed,
        start_state: args.start_state,
        mode: args.mode.into(),
        trace_every: args.trace_every,
    };
    let out = rtd_evaluate(&bundle.mdp, &bundle.spec, &policy, &config)?;
    let json_path = args.out.with_extension("json");
    io::save_theta(&json_path, &out.theta)?;
    let csv_path = args.out.with_extension("csv");
    io::save_trace_csv(&csv_path, out.trace.as_deref().unwrap_or(&[]))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Counterexample,
    Lemmas,
    Contraction,
    Gradient,
}

impl From<SuiteArg> for Suite {
    fn from(value: SuiteArg) -> Self {
        match value {
            SuiteArg::All => Suite::All,
            SuiteArg::Counterexample => Suite::Counterexample,
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Contraction => Suite::Contraction,
            SuiteArg::Gradient => Suite::Gradient,
        }
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Cost parameter of the counterexample instance.
    #[arg(long = "C", default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

/// Returns false when some check failed.
fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let checks = run_suite(args.suite.into(), args.c, args.gamma, args.seed, args.trials)?;
    let mut all_pass = true;
    for check in &checks {
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!("{status}  {:<32} {}", check.name, check.detail);
        all_pass &= check.pass;
    }
    Ok(all_pass)
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
}

fn run_gen(args: &GenArgs) -> Result<()> {
    let bundle = args.instance.load()?;
    io::save_bundle(&args.out, &bundle)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "uniform")]
    rho: String,
    /// Skip the sampled estimate and print the closed-form pessimistic bound.
    #[arg(long, default_value_t = false)]
    pessimistic: bool,
}

fn run_constants(args: &ConstantsArgs) -> Result<()> {
    let bundle = args.instance.load()?;
    let rho = parse_rho(&args.rho, bundle.mdp.n_states)?;
    let reference = if args.pessimistic {
        None
    } else {
        Some(rvi_solve(&bundle.mdp, &bundle.spec, 1e-12)?)
    };
    let constants = pessimistic_constants(
        &bundle.mdp,
        &bundle.spec,
        &rho,
        reference.as_ref().map(|r| &r.pi_star),
    )?;
    println!(
        "M = {:.6}\nM' = {:.6}\nratio = {:.6}\nkind = {}",
        constants.m,
        constants.m_prime,
        constants.ratio,
        if constants.estimated { "sampled estimate" } else { "pessimistic bound" },
    );
    Ok(())
}

/// Parses and executes a full command line (excluding the binary name is
/// fine; clap tolerates both). Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful terminations.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args).map(|()| 0),
        Command::Evaluate(args) => run_evaluate(args).map(|()| 0),
        Command::Rtd(args) => run_rtd(args).map(|()| 0),
        Command::Verify(args) => run_verify(args).map(|pass| if pass { 0 } else { 2 }),
        Command::Gen(args) => run_gen(args).map(|()| 0),
        Command::Constants(args) => run_constants(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            3
        }
    }
}

fn init_thread_pool() {
    if let Ok(text) = std::env::var("ROBUSTMDP_THREADS") {
        if let Ok(n) = text.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
