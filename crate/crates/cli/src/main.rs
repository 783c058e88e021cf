//! `eprm` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid input, 2 internal invariant violation.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use eprm::airsim::{generate_corpus, GenerationParams};
use eprm::evidence::{Event, MassAssignment, SetEvent};
use eprm::harness::{self, HarnessError, ResultsFile};
use eprm::pattern::{decide, fuse_sequence, PreferenceParams};
use eprm::registry::{graph_operators, perm_operators, set_operators, OperatorRegistry};
use eprm::{GraphEvent, PermEvent};

#[derive(Parser)]
#[command(
    name = "eprm",
    version,
    about = "Evidence pattern reasoning experiments"
)]
struct Cli {
    /// Worker threads for simulation and decisions (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of simulated cases.
    Simulate {
        #[arg(long)]
        cases: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Keep full trajectories in each case file.
        #[arg(long)]
        full: bool,
    },
    /// Decide every case of a corpus directory.
    Decide {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-tabulate a results file into a report directory.
    Stats {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the intermediate steps of one case as JSON lines.
    Trace {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate, decide and report in one go.
    RunAll {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cases: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Fuse a list of sources with registry-selected operators.
    Fuse {
        #[arg(long, value_enum)]
        algebra: Algebra,
        /// Pattern operator name.
        #[arg(long)]
        po: String,
        /// Decision operator name.
        #[arg(long)]
        dmo: Option<String>,
        /// JSON file with `sources` and optional `preferences`.
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mvd,
    Crd,
    Both,
}

impl Method {
    fn names(self) -> &'static [&'static str] {
        match self {
            Method::Mvd => &["mvd"],
            Method::Crd => &["crd"],
            Method::Both => &["mvd", "crd"],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algebra {
    Set,
    Perm,
    Graph,
}

/// Overrides for the default generation settings.
#[derive(clap::Args)]
struct SimArgs {
    #[arg(long)]
    aircraft: Option<usize>,
    #[arg(long)]
    sensors: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    speed_min: Option<f64>,
    #[arg(long)]
    speed_max: Option<f64>,
}

impl SimArgs {
    fn params(&self) -> GenerationParams {
        let mut p = GenerationParams::default();
        if let Some(v) = self.aircraft {
            p.aircraft = v;
        }
        if let Some(v) = self.sensors {
            p.sensors = v;
        }
        if let Some(v) = self.radius {
            p.radius = v;
        }
        if let Some(v) = self.dt {
            p.dt = v;
        }
        if let Some(v) = self.sigma2 {
            p.sigma2 = v;
        }
        if let Some(v) = self.speed_min {
            p.speed_min = v;
        }
        if let Some(v) = self.speed_max {
            p.speed_max = v;
        }
        p
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    fn invariant(message: impl Display) -> Self {
        Self {
            code: 2,
            message: format!("internal invariant violated: {message}"),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = cli.workers;
    match cli.command {
        Command::Simulate {
            cases,
            seed,
            out,
            sim,
            full,
        } => {
            let params = sim.params();
            let corpus = harness_pool(workers, || generate_corpus(&params, seed, cases, full))?
                .map_err(Failure::input)?;
            harness::write_corpus(&out, &corpus)?;
            eprintln!("wrote {} cases to {}", corpus.len(), out.display());
        }
        Command::Decide { cases, method, out } => {
            let experiment = harness::run_experiment(&cases, method.names(), workers)?;
            harness::write_results(&out, &experiment.results)?;
            report_skipped(&experiment.results);
            if let Some(stats) = experiment.stats {
                print_json(&stats)?;
            }
        }
        Command::Stats { results, out } => {
            let results = harness::read_results(&results)?;
            let stats = harness::write_report(&out, &results)?;
            print_json(&stats)?;
        }
        Command::Trace { case, out } => {
            let case = harness::read_case(&case)?;
            harness::write_trace(&out, &case)?;
        }
        Command::RunAll {
            seed,
            cases,
            out,
            sim,
        } => {
            let stats = harness::run_all(&sim.params(), seed, cases, &out, workers)?;
            print_json(&stats)?;
        }
        Command::Fuse {
            algebra,
            po,
            dmo,
            input,
            out,
        } => {
            let value = match algebra {
                Algebra::Set => fuse::<SetEvent>(&set_operators(), &po, dmo.as_deref(), &input),
                Algebra::Perm => fuse::<PermEvent>(&perm_operators(), &po, dmo.as_deref(), &input),
                Algebra::Graph => {
                    fuse::<GraphEvent>(&graph_operators(), &po, dmo.as_deref(), &input)
                }
            }?;
            let text = pretty(&value)?;
            match out {
                Some(path) => fs::write(&path, text)
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

/// Runs `f` on a pool sized like the harness pools.
fn harness_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::input(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Deserialize)]
#[serde(bound = "")]
struct FuseInput<E: Event> {
    sources: Vec<MassAssignment<E>>,
    #[serde(default)]
    preferences: PreferenceParams,
}

fn fuse<E: Event>(
    registry: &OperatorRegistry<E>,
    po: &str,
    dmo: Option<&str>,
    input: &Path,
) -> Result<serde_json::Value, Failure> {
    let po = registry.pattern(po).map_err(Failure::input)?;
    let dmo = dmo
        .map(|name| registry.decision(name))
        .transpose()
        .map_err(Failure::input)?;
    let text = fs::read_to_string(input)
        .map_err(|e| Failure::input(format!("{}: {e}", input.display())))?;
    let parsed: FuseInput<E> = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", input.display())))?;
    for (i, source) in parsed.sources.iter().enumerate() {
        let violations = source.validate();
        if !violations.is_empty() {
            return Err(Failure::input(format!("source {i}: {violations:?}")));
        }
    }
    let fused = fuse_sequence(&parsed.sources, po.as_ref()).map_err(Failure::input)?;
    let violations = fused.validate();
    if !violations.is_empty() {
        return Err(Failure::invariant(format!("fused source: {violations:?}")));
    }
    let decision = match dmo {
        Some(d) => Some(decide(&fused, d.as_ref(), &parsed.preferences).map_err(Failure::input)?),
        None => None,
    };
    Ok(json!({ "fused": fused, "decision": decision }))
}

fn report_skipped(results: &ResultsFile) {
    for s in &results.skipped {
        eprintln!("skipped {}: {}", s.file, s.reason);
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Failure::invariant)?;
    s.push('\n');
    Ok(s)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    print!("{}", pretty(value)?);
    Ok(())
}
