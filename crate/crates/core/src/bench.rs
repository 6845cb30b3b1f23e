//! Verification suites and parameter sweeps.
//!
//! Each suite instance and each sweep cell is an isolated, single-threaded
//! engine run, so they are spread over a worker pool when the `parallel`
//! feature is on. Results come back in input order either way.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{self, Distribution, GenSpec};
use crate::error::{Error, Result};
use crate::fdom::{Spread, WeightPolytope};
use crate::fixtures;
use crate::model::Dataset;
use crate::nra::{self, Fault, RunConfig, RunMetrics};
use crate::oracles::{self, IdSet};

/// Environment variable that sets the worker-pool size.
pub const THREADS_ENV: &str = "FLEXSKY_THREADS";

/// Pool size: explicit value, else `FLEXSKY_THREADS`, else available parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on a pool of `threads` workers, keeping input order.
#[cfg(feature = "parallel")]
pub fn map_pool<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_pool<T, R, F>(items: &[T], _threads: usize, f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Where the weights of a run come from.
#[derive(Debug, Clone)]
pub enum Family {
    Spread(Spread),
    Polytope(WeightPolytope),
}

impl Family {
    pub fn polytope(&self, dim: usize) -> Result<WeightPolytope> {
        match self {
            Family::Spread(s) => WeightPolytope::from_epsilon(dim, *s),
            Family::Polytope(p) if p.dim() == dim => Ok(p.clone()),
            Family::Polytope(p) => Err(Error::VectorDimension(p.dim(), dim)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub label: String,
    pub engine: IdSet,
    pub oracle: IdSet,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.engine == self.oracle
    }

    pub fn summary(&self) -> String {
        if let Some(e) = &self.error {
            return format!("FAIL {}: {e}", self.label);
        }
        if self.passed() {
            format!("ok   {} ({} tuples)", self.label, self.engine.len())
        } else {
            let missing: Vec<_> = self.oracle.difference(&self.engine).collect();
            let extra: Vec<_> = self.engine.difference(&self.oracle).collect();
            format!(
                "FAIL {}: missing {missing:?}, unexpected {extra:?}",
                self.label
            )
        }
    }
}

/// Runs the engine on the vertical partition of `ds` and compares with the
/// brute-force answer.
pub fn verify_dataset(
    label: impl Into<String>,
    ds: &Dataset,
    polytope: &WeightPolytope,
    k: usize,
    mu: usize,
    fault: Option<Fault>,
) -> VerifyOutcome {
    let label = label.into();
    let fail = |label: String, e: Error| VerifyOutcome {
        label,
        engine: IdSet::new(),
        oracle: IdSet::new(),
        metrics: None,
        error: Some(e.to_string()),
    };
    let oracle = match oracles::nd_k_bruteforce_seq(ds, polytope, k) {
        Ok(o) => o,
        Err(e) => return fail(label, e),
    };
    let config = match RunConfig::new(k, mu, polytope.clone(), ds.attr_max().to_vec()) {
        Ok(c) => match fault {
            Some(f) => c.with_fault(f),
            None => c,
        },
        Err(e) => return fail(label, e),
    };
    match nra::run(&mut ds.vertical_partition(), &config) {
        Ok(out) => VerifyOutcome {
            label,
            engine: out.result.iter().map(|t| t.id.clone()).collect(),
            oracle,
            metrics: Some(out.metrics),
            error: None,
        },
        Err(e) => fail(label, e),
    }
}

/// The worked example: four weight families on the nine locations.
pub fn golden_cases() -> Vec<(String, WeightPolytope, usize)> {
    let w = fixtures::first_weight_dominant();
    vec![
        ("w1>=w2 k=1".into(), w.clone(), 1),
        ("w1>=w2 k=2".into(), w, 2),
        (
            "full k=2".into(),
            WeightPolytope::from_epsilon(2, Spread::Full).expect("valid"),
            2,
        ),
        (
            "centroid k=2".into(),
            WeightPolytope::from_epsilon(2, Spread::None).expect("valid"),
            2,
        ),
    ]
}

/// Randomized equivalence suite parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSuite {
    pub instances: usize,
    pub max_n: usize,
    pub seed: u64,
    pub distributions: Vec<Distribution>,
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub spreads: Vec<Spread>,
    pub mus: Vec<usize>,
}

impl Default for RandomSuite {
    fn default() -> Self {
        RandomSuite {
            instances: 1000,
            max_n: 200,
            seed: 2024,
            distributions: vec![Distribution::Uni, Distribution::Ant],
            dims: vec![2, 3, 4],
            ks: vec![1, 2, 5],
            spreads: vec![
                Spread::None,
                Spread::Ratio(0.05),
                Spread::Ratio(0.2),
                Spread::Full,
            ],
            mus: vec![1, 10],
        }
    }
}

/// One drawn instance of a [`RandomSuite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteCase {
    pub gen: GenSpec,
    pub k: usize,
    pub spread: Spread,
    pub mu: usize,
}

impl SuiteCase {
    pub fn label(&self) -> String {
        format!(
            "{} n={} d={} seed={} k={} eps={} mu={}",
            self.gen.distribution,
            self.gen.n,
            self.gen.d,
            self.gen.seed,
            self.k,
            self.spread,
            self.mu
        )
    }
}

impl RandomSuite {
    pub fn cases(&self) -> Result<Vec<SuiteCase>> {
        let empty = self.distributions.is_empty()
            || self.dims.is_empty()
            || self.ks.is_empty()
            || self.spreads.is_empty()
            || self.mus.is_empty();
        if empty || self.max_n == 0 {
            return Err(Error::Config(
                "random suite needs a non-empty grid and max_n >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pick = |n: usize| rng.random_range(0..n);
        (0..self.instances)
            .map(|_| {
                let distribution = self.distributions[pick(self.distributions.len())];
                let d = self.dims[pick(self.dims.len())];
                let n = 1 + pick(self.max_n);
                let k = self.ks[pick(self.ks.len())];
                let spread = self.spreads[pick(self.spreads.len())];
                let mu = self.mus[pick(self.mus.len())];
                let seed = pick(u32::MAX as usize) as u64;
                Ok(SuiteCase {
                    gen: GenSpec::new(distribution, n, d, seed)?,
                    k,
                    spread,
                    mu,
                })
            })
            .collect()
    }
}

pub fn run_suite(cases: &[SuiteCase], threads: usize, fault: Option<Fault>) -> Vec<VerifyOutcome> {
    map_pool(cases, threads, |case| {
        let label = case.label();
        let ds = match datagen::generate(&case.gen) {
            Ok(ds) => ds,
            Err(e) => {
                return VerifyOutcome {
                    label,
                    engine: IdSet::new(),
                    oracle: IdSet::new(),
                    metrics: None,
                    error: Some(e.to_string()),
                }
            }
        };
        match WeightPolytope::from_epsilon(case.gen.d, case.spread) {
            Ok(w) => verify_dataset(label, &ds, &w, case.k, case.mu, fault),
            Err(e) => VerifyOutcome {
                label,
                engine: IdSet::new(),
                oracle: IdSet::new(),
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    })
}

fn default_dists() -> Vec<Distribution> {
    vec![Distribution::Uni]
}
fn default_ns() -> Vec<usize> {
    vec![100_000]
}
fn default_ds() -> Vec<usize> {
    vec![2]
}
fn default_ks() -> Vec<usize> {
    vec![10]
}
fn default_spreads() -> Vec<Spread> {
    vec![Spread::Ratio(0.01)]
}
fn default_mus() -> Vec<usize> {
    vec![100]
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn one() -> usize {
    1
}

/// Cartesian parameter grid. Missing fields take the defaults
/// UNI, N = 100K, d = 2, k = 10, eps = 0.01, mu = 100, seed 1, one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "default_dists")]
    pub distributions: Vec<Distribution>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_ds")]
    pub dims: Vec<usize>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_spreads")]
    pub spreads: Vec<Spread>,
    #[serde(default = "default_mus")]
    pub mus: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Also compute the brute-force output size per cell.
    #[serde(default)]
    pub oracle: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            distributions: default_dists(),
            ns: default_ns(),
            dims: default_ds(),
            ks: default_ks(),
            spreads: default_spreads(),
            mus: default_mus(),
            seeds: default_seeds(),
            repetitions: 1,
            oracle: false,
        }
    }
}

pub const PRESETS: &[&str] = &["size", "dims", "k", "eps", "mu", "ant"];

impl SweepSpec {
    /// Desk-scale versions of the standard sweeps; every parameter not swept
    /// keeps its default.
    pub fn preset(name: &str) -> Result<Self> {
        let base = SweepSpec::default();
        let small = vec![10_000];
        Ok(match name {
            "size" => SweepSpec {
                ns: vec![10_000, 50_000, 100_000],
                ..base
            },
            "dims" => SweepSpec {
                ns: small,
                dims: vec![2, 3, 4],
                ..base
            },
            "k" => SweepSpec {
                ns: small,
                ks: vec![1, 2, 5, 10, 20, 50, 100],
                ..base
            },
            "eps" => SweepSpec {
                ns: small,
                spreads: vec![
                    Spread::None,
                    Spread::Ratio(0.01),
                    Spread::Ratio(0.02),
                    Spread::Ratio(0.05),
                    Spread::Ratio(0.1),
                    Spread::Ratio(0.2),
                    Spread::Ratio(0.5),
                    Spread::Full,
                ],
                ..base
            },
            "mu" => SweepSpec {
                ns: small,
                mus: vec![1, 10, 100, 1000],
                ..base
            },
            "ant" => SweepSpec {
                distributions: vec![Distribution::Ant],
                ns: small,
                ks: vec![1],
                spreads: vec![Spread::None],
                mus: vec![1000],
                ..base
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn cells(&self) -> Result<Vec<SweepCell>> {
        let mut cells = Vec::new();
        for &distribution in &self.distributions {
            for &n in &self.ns {
                for &d in &self.dims {
                    for &k in &self.ks {
                        for &spread in &self.spreads {
                            for &mu in &self.mus {
                                for &seed in &self.seeds {
                                    if k == 0 || mu == 0 {
                                        return Err(Error::Config(
                                            "k and mu must be at least 1".into(),
                                        ));
                                    }
                                    cells.push(SweepCell {
                                        gen: GenSpec::new(distribution, n, d, seed)?,
                                        k,
                                        spread,
                                        mu,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub gen: GenSpec,
    pub k: usize,
    pub spread: Spread,
    pub mu: usize,
}

/// One line of the sweep report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dist: Distribution,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub eps: Spread,
    pub mu: usize,
    pub seed: u64,
    pub depth_grow_total: u64,
    pub depth_shrink_total: u64,
    pub sum_depths: u64,
    pub fdom_tests: u64,
    pub buffer_peak: usize,
    pub output_size: usize,
    pub elapsed_ms: f64,
    pub max_depth: u64,
    pub buffer_after_growing: usize,
    pub oracle_size: Option<usize>,
}

impl ReportRow {
    /// Per-list depth as a fraction of the relation size.
    pub fn depth_fraction(&self) -> f64 {
        self.max_depth as f64 / self.n as f64
    }
}

/// Runs one cell: generate, partition, run the engine, optionally the oracle.
pub fn run_cell(cell: &SweepCell, oracle: bool) -> Result<ReportRow> {
    let ds = datagen::generate(&cell.gen)?;
    let polytope = WeightPolytope::from_epsilon(cell.gen.d, cell.spread)?;
    let config = RunConfig::new(cell.k, cell.mu, polytope.clone(), ds.attr_max().to_vec())?;
    let out = nra::run(&mut ds.vertical_partition(), &config)?;
    let oracle_size = if oracle {
        Some(oracles::nd_k_bruteforce_seq(&ds, &polytope, cell.k)?.len())
    } else {
        None
    };
    let m = &out.metrics;
    Ok(ReportRow {
        dist: cell.gen.distribution,
        n: cell.gen.n,
        d: cell.gen.d,
        k: cell.k,
        eps: cell.spread,
        mu: cell.mu,
        seed: cell.gen.seed,
        depth_grow_total: m.depth_growing_total(),
        depth_shrink_total: m.depth_shrinking_total(),
        sum_depths: m.sum_depths(),
        fdom_tests: m.fdom_tests,
        buffer_peak: m.buffer_peak,
        output_size: m.output_size,
        elapsed_ms: m.elapsed.as_secs_f64() * 1e3,
        max_depth: m.max_depth(),
        buffer_after_growing: m.buffer_after_growing,
        oracle_size,
    })
}

/// One row per (cell, repetition), in grid order.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<Vec<ReportRow>> {
    let cells = spec.cells()?;
    let jobs: Vec<&SweepCell> = cells
        .iter()
        .flat_map(|c| std::iter::repeat_n(c, spec.repetitions.max(1)))
        .collect();
    map_pool(&jobs, threads, |cell| run_cell(cell, spec.oracle))
        .into_iter()
        .collect()
}

pub const REPORT_COLUMNS: &[&str] = &[
    "dist",
    "n",
    "d",
    "k",
    "eps",
    "mu",
    "seed",
    "depth_grow_total",
    "depth_shrink_total",
    "sum_depths",
    "fdom_tests",
    "buffer_peak",
    "output_size",
    "elapsed_ms",
    "max_depth",
    "buffer_after_growing",
    "oracle_size",
];

pub fn write_report_csv(rows: &[ReportRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

/// Mean of every metric over the rows sharing `(dist, n, d, k, eps, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub dist: Distribution,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub eps: Spread,
    pub mu: usize,
    pub runs: usize,
    pub depth_grow_total: f64,
    pub depth_shrink_total: f64,
    pub sum_depths: f64,
    pub fdom_tests: f64,
    pub buffer_peak: f64,
    pub output_size: f64,
    pub elapsed_ms: f64,
    pub max_depth: f64,
    pub buffer_after_growing: f64,
}

pub fn aggregate(rows: &[ReportRow]) -> Vec<AggregateRow> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        let key = format!("{}|{}|{}|{}|{}|{}", r.dist, r.n, r.d, r.k, r.eps, r.mu);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let mean = |f: &dyn Fn(&ReportRow) -> f64| {
                g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64
            };
            let first = g[0];
            AggregateRow {
                dist: first.dist,
                n: first.n,
                d: first.d,
                k: first.k,
                eps: first.eps,
                mu: first.mu,
                runs: g.len(),
                depth_grow_total: mean(&|r| r.depth_grow_total as f64),
                depth_shrink_total: mean(&|r| r.depth_shrink_total as f64),
                sum_depths: mean(&|r| r.sum_depths as f64),
                fdom_tests: mean(&|r| r.fdom_tests as f64),
                buffer_peak: mean(&|r| r.buffer_peak as f64),
                output_size: mean(&|r| r.output_size as f64),
                elapsed_ms: mean(&|r| r.elapsed_ms),
                max_depth: mean(&|r| r.max_depth as f64),
                buffer_after_growing: mean(&|r| r.buffer_after_growing as f64),
            }
        })
        .collect()
}

pub fn write_aggregate_csv(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<aggregate>", e))
}
