use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flexsky::bench::{self, RandomSuite, SweepSpec, THREADS_ENV};
use flexsky::datagen::{self, Distribution, GenSpec};
use flexsky::fdom::ConstraintSet;
use flexsky::nra::{self, Fault, RunConfig};
use flexsky::{oracles, Dataset, Spread, WeightPolytope};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "flexsky",
    version,
    about = "ND_k flexible skylines over sorted-access ranked lists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (or import a CSV) and write its vertical partition.
    Generate(GenerateArgs),
    /// Run the sorted-access engine on a partition directory.
    Run(RunArgs),
    /// Brute-force reference answers on a dataset CSV.
    Oracle(OracleArgs),
    /// Compare the engine with the brute-force oracle.
    Verify(VerifyArgs),
    /// Run a parameter sweep and write a CSV report.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, required_unless_present = "from_csv")]
    dist: Option<DistArg>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Import this dataset CSV instead of generating one.
    #[arg(long, conflicts_with = "dist")]
    from_csv: Option<PathBuf>,
    /// Rescale imported attributes onto [0, 1].
    #[arg(long, requires = "from_csv")]
    normalize: bool,
    /// Declared attribute maxima for an imported dataset, comma separated.
    #[arg(long, value_delimiter = ',', requires = "from_csv")]
    attr_max: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uni,
    Ant,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Uni => Distribution::Uni,
            DistArg::Ant => Distribution::Ant,
        }
    }
}

/// Scoring-function family: ratio-bound spread or a constraint file.
#[derive(Args, Clone)]
struct FamilyArgs {
    /// none, a spread in (0, 1], or full.
    #[arg(long, default_value = "0.01", conflicts_with = "constraints")]
    eps: Spread,
    /// JSON constraint file: {"dim", "inequalities": [{"a", "b"}], "normalize"}.
    #[arg(long)]
    constraints: Option<PathBuf>,
}

impl FamilyArgs {
    fn polytope(&self, dim: usize) -> flexsky::Result<WeightPolytope> {
        match &self.constraints {
            Some(path) => {
                let p = ConstraintSet::load(path)?.to_polytope()?;
                if p.dim() != dim {
                    return Err(flexsky::Error::VectorDimension(p.dim(), dim));
                }
                Ok(p)
            }
            None => WeightPolytope::from_epsilon(dim, self.eps),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Directory with list_1.csv ... list_d.csv and optionally meta.json.
    #[arg(long)]
    lists: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    mu: usize,
    #[command(flatten)]
    family: FamilyArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Skyline,
    Skyband,
    Topk,
    Ndk,
    MinStopDepth,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    kind: OracleKind,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    family: FamilyArgs,
    /// Weights for topk, comma separated (default: centroid 1/d).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    PruneOffByOne,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dataset CSV to check.
    #[arg(long, conflicts_with_all = ["golden", "random_suite"])]
    dataset: Option<PathBuf>,
    /// Check the four worked-example configurations for mu in {1, 3}.
    #[arg(long)]
    golden: bool,
    /// Check randomly drawn UNI/ANT instances.
    #[arg(long)]
    random_suite: bool,
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, default_value_t = 200)]
    max_n: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    mu: usize,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Print every instance, not just failures.
    #[arg(long)]
    verbose: bool,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Args)]
struct SweepArgs {
    /// One of: size, dims, k, eps, mu, ant.
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
    /// JSON sweep specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    dist: Option<Vec<DistArg>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<Spread>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
    /// Also record the brute-force output size (quadratic; keep N small).
    #[arg(long)]
    oracle: bool,
    /// Per-run report (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Means over seeds and repetitions.
    #[arg(long)]
    agg_out: Option<PathBuf>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Oracle(a) => oracle(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(a: GenerateArgs) -> CmdResult {
    let (ds, spec) = match &a.from_csv {
        Some(path) => {
            let ds = datagen::load_dataset_csv(path, a.attr_max.clone())?;
            let ds = if a.normalize {
                datagen::normalize(&ds)
            } else {
                ds
            };
            (ds, None)
        }
        None => {
            let dist = a.dist.expect("clap requires --dist without --from-csv");
            let spec = GenSpec::new(dist.into(), a.n, a.d, a.seed)?;
            (datagen::generate(&spec)?, Some(spec))
        }
    };
    datagen::export_partition(&ds, &a.out, spec.as_ref())?;
    datagen::write_dataset_csv(&ds, a.out.join("dataset.csv"))?;
    eprintln!(
        "wrote {} tuples ({} attributes) to {}",
        ds.len(),
        ds.dim(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(a: RunArgs) -> CmdResult {
    let (mut sources, meta) = datagen::open_partition(&a.lists)?;
    let polytope = a.family.polytope(meta.d)?;
    let config = RunConfig::new(a.k, a.mu, polytope, meta.attr_max)?;
    let out = nra::run(&mut sources, &config)?;
    let mut w = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &out.to_json())?;
    writeln!(w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(a: OracleArgs) -> CmdResult {
    let ds = datagen::load_dataset_csv(&a.dataset, None)?;
    let report = match a.kind {
        OracleKind::Skyline => ids_json("skyline", oracles::skyline(&ds)),
        OracleKind::Skyband => ids_json("skyband", oracles::skyband(&ds, a.k)),
        OracleKind::Topk => {
            let weights = a
                .weights
                .unwrap_or_else(|| vec![1.0 / ds.dim() as f64; ds.dim()]);
            ids_json("topk", oracles::top_k(&ds, &weights, a.k)?)
        }
        OracleKind::Ndk => {
            let w = a.family.polytope(ds.dim())?;
            ids_json("ndk", oracles::nd_k_bruteforce(&ds, &w, a.k)?)
        }
        OracleKind::MinStopDepth => {
            let w = a.family.polytope(ds.dim())?;
            let depth = oracles::min_stop_depth(&ds, &w, a.k, ds.attr_max())?;
            json!({ "kind": "min_stop_depth", "depth": depth, "n": ds.len() })
        }
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn ids_json(kind: &str, ids: oracles::IdSet) -> serde_json::Value {
    json!({ "kind": kind, "size": ids.len(), "ids": ids })
}

fn verify(a: VerifyArgs) -> CmdResult {
    let fault = a.inject_fault.map(|f| match f {
        FaultArg::PruneOffByOne => Fault::PruneOffByOne,
    });
    let threads = bench::resolve_threads(a.threads);
    let outcomes = if a.random_suite {
        let suite = RandomSuite {
            instances: a.instances,
            max_n: a.max_n,
            seed: a.seed,
            ..RandomSuite::default()
        };
        bench::run_suite(&suite.cases()?, threads, fault)
    } else if a.golden {
        let ds = flexsky::fixtures::nine_locations();
        bench::golden_cases()
            .into_iter()
            .flat_map(|(label, w, k)| {
                let ds = &ds;
                [1, 3].map(|mu| {
                    bench::verify_dataset(format!("{label} mu={mu}"), ds, &w, k, mu, fault)
                })
            })
            .collect()
    } else if let Some(path) = &a.dataset {
        let ds: Dataset = datagen::load_dataset_csv(path, None)?;
        let w = a.family.polytope(ds.dim())?;
        let label = format!("{} k={} mu={}", path.display(), a.k, a.mu);
        vec![bench::verify_dataset(label, &ds, &w, a.k, a.mu, fault)]
    } else {
        return Err("one of --dataset, --golden or --random-suite is required".into());
    };

    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    for o in &outcomes {
        if a.verbose || !o.passed() {
            println!("{}", o.summary());
        }
    }
    println!(
        "{} instances, {} passed, {failed} failed",
        outcomes.len(),
        outcomes.len() - failed
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn sweep(a: SweepArgs) -> CmdResult {
    let mut spec = match (&a.preset, &a.spec) {
        (Some(name), _) => SweepSpec::preset(name)?,
        (None, Some(path)) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        (None, None) => SweepSpec::default(),
    };
    if let Some(v) = a.dist {
        spec.distributions = v.into_iter().map(Into::into).collect();
    }
    if let Some(v) = a.n {
        spec.ns = v;
    }
    if let Some(v) = a.d {
        spec.dims = v;
    }
    if let Some(v) = a.k {
        spec.ks = v;
    }
    if let Some(v) = a.eps {
        spec.spreads = v;
    }
    if let Some(v) = a.mu {
        spec.mus = v;
    }
    if let Some(v) = a.seeds {
        spec.seeds = v;
    }
    if let Some(r) = a.reps {
        spec.repetitions = r;
    }
    spec.oracle |= a.oracle;

    let rows = bench::run_sweep(&spec, bench::resolve_threads(a.threads))?;
    bench::write_report_csv(&rows, output(a.out.as_deref())?)?;
    if let Some(path) = &a.agg_out {
        bench::write_aggregate_csv(&bench::aggregate(&rows), File::create(path)?)?;
    }
    Ok(ExitCode::SUCCESS)
}
