use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spd_means::barycenter::{right_mean, BarycenterProblem};
use spd_means::explore::{explore, Conjecture, ExploreReport};
use spd_means::fixed_point::{cartan_mean, power_mean, renyi_power_mean, wasserstein_mean};
use spd_means::io::{Parameters, ProblemFile, ResultRecord};
use spd_means::metrics::Alpha;
use spd_means::sweep::{parse_grid, sweep};
use spd_means::two_means::{arithmetic_mean, harmonic_mean};
use spd_means::verify::{self, Replay, Suite};
use spd_means::{g_mean, Error, Init, MatrixTuple, SolveMethod, SolveReport, SolverOptions, WeightVector};

/// Appends a line to the output buffer.
macro_rules! outln {
    ($o:expr) => {
        $o.push('\n')
    };
    ($o:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = writeln!($o, $($arg)*);
    }};
}

macro_rules! out {
    ($o:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = write!($o, $($arg)*);
    }};
}

/// Process exit codes.
mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const PRECONDITION: u8 = 4;
    pub const MAX_ITER: u8 = 5;
    pub const CHECK_FAILED: u8 = 6;
    pub const IO: u8 = 7;
    pub const NUMERICAL: u8 = 8;
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => exit::PARSE,
        Error::Io(_) => exit::IO,
        Error::MaxIterExceeded { .. } => exit::MAX_ITER,
        Error::DimensionMismatch { .. }
        | Error::NotSquare { .. }
        | Error::NotPositiveDefinite
        | Error::NonFinite
        | Error::SingularTransform { .. }
        | Error::ParameterOutOfRange { .. }
        | Error::InvalidWeights(_)
        | Error::EmptyTuple
        | Error::PreconditionViolated(_)
        | Error::RankDeficient => exit::PRECONDITION,
        Error::IllConditioned { .. }
        | Error::NegativeTrace(_)
        | Error::NegativeDivergence(_)
        | Error::StepTooLarge
        | Error::CertificateFailed { .. } => exit::NUMERICAL,
    }
}

#[derive(Parser)]
#[command(name = "spdmean", version, about = "Fixed-point means of positive definite matrices")]
#[command(after_help = "Exit codes: 0 ok, 2 usage, 3 parse, 4 precondition, 5 no convergence, \
6 failed check (verify/sweep), 7 i/o, 8 numerical failure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    G,
    Power,
    Cartan,
    Wasserstein,
    Renyi,
    Arithmetic,
    Harmonic,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::G => "g",
            Kind::Power => "power",
            Kind::Cartan => "cartan",
            Kind::Wasserstein => "wasserstein",
            Kind::Renyi => "renyi",
            Kind::Arithmetic => "arithmetic",
            Kind::Harmonic => "harmonic",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Arithmetic,
    Harmonic,
    Identity,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Convergence tolerance on the Thompson step.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "arithmetic")]
    init: InitArg,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, Error> {
        let init = match self.init {
            InitArg::Arithmetic => Init::ArithmeticMean,
            InitArg::Harmonic => Init::HarmonicMean,
            InitArg::Identity => Init::Identity,
        };
        SolverOptions::new(self.tol, self.max_iter, init)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute one mean of the tuple in a problem file.
    Mean {
        #[arg(value_enum)]
        kind: Kind,
        input: PathBuf,
        /// Mean parameter; falls back to the file, then 0.5.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Second Rényi parameter.
        #[arg(long)]
        z: Option<f64>,
        /// Divergence parameter; for kind g this solves the right mean at t = (1 − α)/2.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Comma-separated weights, overriding the file.
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the result here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve G_t over a grid of t values.
    Sweep {
        input: PathBuf,
        /// Comma list or start:stop:count.
        #[arg(long, default_value = "0:1:11")]
        grid: String,
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also write the rows as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded property suites.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Re-run one instance given as INVARIANT:STREAM (uses --seed).
        #[arg(long)]
        replay: Option<String>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gather evidence on an open relationship; always succeeds when it runs.
    Explore {
        conjecture: String,
        /// Evaluate this problem file at --t instead of random instances.
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let mut out = String::new();
    let result = run(cli.command, &mut out);
    flush(&out);
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command, o: &mut String) -> Result<u8, Error> {
    match command {
        Command::Mean {
            kind,
            input,
            t,
            z,
            alpha,
            weights,
            solver,
            out,
        } => {
            let problem = ProblemFile::read(&input)?;
            let tuple = load_tuple(&problem, weights.as_deref())?;
            let params = Parameters {
                t: t.or(problem.t),
                z,
                alpha: alpha.or(problem.alpha),
            };
            let opts = solver.options()?;
            let start = Instant::now();
            let (report, params) = compute(kind, &tuple, params, &opts)?;
            let record = ResultRecord::new(kind.name(), params, &report, start.elapsed().as_secs_f64());
            emit(o, &record.to_json(), out.as_deref())?;
            Ok(exit::OK)
        }
        Command::Sweep {
            input,
            grid,
            weights,
            solver,
            out,
        } => {
            let tuple = load_tuple(&ProblemFile::read(&input)?, weights.as_deref())?;
            let report = sweep(&tuple, &parse_grid(&grid)?, &solver.options()?)?;
            outln!(o, 
                "{:>8}  {:>22}  {:>22}  {:>12}  {:>12}  {:>6}",
                "t", "max eigenvalue", "min eigenvalue", "d(G, A)", "d(G, H)", "iter"
            );
            for r in &report.rows {
                let cell = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{v:.16e}"));
                let short = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{v:.6e}"));
                out!(o, 
                    "{:>8.4}  {:>22}  {:>22}  {:>12}  {:>12}  {:>6}",
                    r.t,
                    cell(r.max_eigenvalue),
                    cell(r.min_eigenvalue),
                    short(r.distance_to_arithmetic),
                    short(r.distance_to_harmonic),
                    r.iterations.map_or("-".to_owned(), |i| i.to_string()),
                );
                match &r.error {
                    Some(e) => outln!(o, "  ERROR: {e}"),
                    None => outln!(o),
                }
            }
            write_json(&report, out.as_deref())?;
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            if failed == 0 {
                Ok(exit::OK)
            } else {
                eprintln!("sweep: {failed} of {} rows failed", report.rows.len());
                Ok(exit::CHECK_FAILED)
            }
        }
        Command::Verify {
            suite,
            seed,
            count,
            replay,
            out,
        } => {
            if let Some(spec) = replay {
                let (name, stream) = spec
                    .rsplit_once(':')
                    .and_then(|(n, s)| Some((n, s.parse::<u64>().ok()?)))
                    .ok_or_else(|| Error::Parse(format!("replay '{spec}': expected INVARIANT:STREAM")))?;
                let v = verify::replay(name, Replay { seed, stream })?;
                outln!(o, "{name} seed {seed} stream {stream}: violation {v:e}");
                return Ok(exit::OK);
            }
            let suite: Suite = suite.parse()?;
            let report = verify::run(suite, seed, count)?;
            outln!(o, 
                "{:<48} {:>6} {:>12} {:>9}  result",
                "invariant", "n", "max viol.", "tol"
            );
            for r in &report.results {
                outln!(o, 
                    "{:<48} {:>6} {:>12.3e} {:>9.0e}  {}",
                    r.invariant,
                    r.instances,
                    r.max_violation,
                    r.tolerance,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
            write_json(&report, out.as_deref())?;
            match report.first_failure() {
                None => {
                    outln!(o, "all {} invariants passed (seed {seed})", report.results.len());
                    Ok(exit::OK)
                }
                Some(f) => {
                    let r = f.replay.expect("failures carry a replay");
                    eprintln!(
                        "first failure: {} (max violation {:e} > {:e}); replay with --seed {} --replay {}:{}",
                        f.invariant, f.max_violation, f.tolerance, r.seed, f.invariant, r.stream
                    );
                    if let Some(e) = &f.error {
                        eprintln!("  error: {e}");
                    }
                    Ok(exit::CHECK_FAILED)
                }
            }
        }
        Command::Explore {
            conjecture,
            input,
            t,
            seed,
            count,
            weights,
            solver,
            out,
        } => {
            let conjecture: Conjecture = conjecture.parse()?;
            let opts = solver.options()?;
            let tuple = match &input {
                Some(path) => Some(load_tuple(&ProblemFile::read(path)?, weights.as_deref())?),
                None => None,
            };
            let report = explore(conjecture, seed, count, tuple.as_ref().map(|m| (m, t)), &opts)?;
            print_explore(o, &report);
            write_json(&report, out.as_deref())?;
            Ok(exit::OK)
        }
    }
}

fn load_tuple(problem: &ProblemFile, weights: Option<&str>) -> Result<MatrixTuple, Error> {
    let tuple = problem.to_tuple()?;
    match weights {
        None => Ok(tuple),
        Some(list) => {
            let w = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("weight '{}' is not a number", s.trim())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            tuple.with_weights(WeightVector::new(w)?)
        }
    }
}

fn compute(
    kind: Kind,
    tuple: &MatrixTuple,
    mut params: Parameters,
    opts: &SolverOptions,
) -> Result<(SolveReport, Parameters), Error> {
    let closed = |solution| SolveReport {
        solution,
        iterations: 0,
        residual: 0.0,
        fixed_point_residual: 0.0,
        contraction_estimate: 0.0,
        certificate: None,
        method: SolveMethod::Direct,
    };
    let report = match kind {
        Kind::G => match (params.t, params.alpha) {
            (Some(_), Some(_)) => {
                return Err(Error::PreconditionViolated(
                    "give either t or alpha for kind g, not both".into(),
                ))
            }
            (_, Some(alpha)) => {
                if !tuple.weights().is_uniform() {
                    return Err(Error::PreconditionViolated(
                        "the divergence right mean is defined for uniform weights".into(),
                    ));
                }
                let p = BarycenterProblem::new(Alpha::new(alpha)?, tuple.matrices().to_vec())?;
                params.t = Some(p.t());
                right_mean(&p, opts)?
            }
            (t, None) => {
                let t = t.unwrap_or(0.5);
                params.t = Some(t);
                g_mean(t, tuple, opts)?
            }
        },
        Kind::Power => {
            let t = params.t.unwrap_or(0.5);
            params = Parameters { t: Some(t), ..Parameters::default() };
            power_mean(t, tuple, opts)?
        }
        Kind::Renyi => {
            let t = params.t.unwrap_or(0.5);
            let z = params
                .z
                .ok_or_else(|| Error::PreconditionViolated("kind renyi needs --z".into()))?;
            params = Parameters { t: Some(t), z: Some(z), alpha: None };
            renyi_power_mean(t, z, tuple, opts)?
        }
        Kind::Cartan => {
            params = Parameters::default();
            cartan_mean(tuple, opts)?
        }
        Kind::Wasserstein => {
            params = Parameters::default();
            wasserstein_mean(tuple, opts)?
        }
        Kind::Arithmetic => {
            params = Parameters::default();
            closed(arithmetic_mean(tuple))
        }
        Kind::Harmonic => {
            params = Parameters::default();
            closed(harmonic_mean(tuple)?)
        }
    };
    Ok((report, params))
}

fn emit(o: &mut String, text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))?,
        None => outln!(o, "{text}"),
    }
    Ok(())
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<(), Error> {
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(value).expect("plain data serializes");
        std::fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

fn print_explore(o: &mut String, report: &ExploreReport) {
    match report {
        ExploreReport::GVsCartan {
            seed,
            count,
            conforming,
            non_conforming,
            failed,
            instances,
        } => {
            outln!(o, "g-vs-cartan: conjectured G_t >= Cartan for t <= 1/2 and G_t <= Cartan for t >= 1/2");
            outln!(o, "{:>8} {:>6} {:>14} {:>13} {:>13}  conforms", "instance", "t", "relation", "min eig(G-L)", "max eig(G-L)");
            for i in instances {
                match (&i.relation, i.eigen_range, &i.error) {
                    (Some(rel), Some((lo, hi)), _) => outln!(o, 
                        "{:>8} {:>6.3} {:>14} {:>13.3e} {:>13.3e}  {}",
                        i.instance,
                        i.t,
                        format!("{rel:?}").to_lowercase(),
                        lo,
                        hi,
                        if i.conforms == Some(true) { "yes" } else { "no" }
                    ),
                    (_, _, Some(e)) => outln!(o, "{:>8} {:>6.3}  ERROR: {e}", i.instance, i.t),
                    _ => {}
                }
            }
            outln!(o, "seed {seed}: {count} instances, {conforming} conforming, {non_conforming} counterexamples, {failed} failed");
            for i in instances.iter().filter(|i| i.witness.is_some()) {
                let w = i.witness.as_ref().expect("filtered");
                outln!(o, "counterexample {} at t = {}: weights {:?}", i.instance, i.t, w.weights);
                for (k, m) in w.matrices.iter().enumerate() {
                    outln!(o, "  A{} = {m:?}", k + 1);
                }
                outln!(o, "  G_t = {:?}", w.g_mean);
                outln!(o, "  Cartan = {:?}", w.cartan_mean);
            }
        }
        ExploreReport::LogMajorization {
            seed,
            count,
            with_gap,
            max_gap,
            failed,
            instances,
        } => {
            outln!(o, "log-majorization: G_t(1/2, 1/2; A^p, B^p)^(1/p) against the log-Euclidean mean");
            for i in instances {
                if let Some(e) = &i.error {
                    outln!(o, "instance {} t = {}: ERROR: {e}", i.instance, i.t);
                    continue;
                }
                outln!(o, "instance {} t = {}", i.instance, i.t);
                for (p, gap, d) in &i.profile {
                    outln!(o, "  p = {p:<6} gap = {gap:.3e}  thompson = {d:.3e}");
                }
            }
            outln!(o, "seed {seed}: {count} instances, {with_gap} with a positive gap (max {max_gap:.3e}), {failed} failed");
        }
    }
}

/// Writes buffered output; a closed pipe is not an error.
fn flush(text: &str) {
    use std::io::Write as _;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush());
}
