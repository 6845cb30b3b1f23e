//! Randomized property checks shared by the `properties` and `acceptance` targets.
//!
//! Each check returns how many cases it examined and a description of every
//! violation, so callers can both assert and report.

#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use flexsky::datagen::{self, Distribution, GenSpec};
use flexsky::fdom::Inequality;
use flexsky::nra::{self, Buffer, GrowingStop, RunConfig, RunObserver};
use flexsky::oracles::{self, IdSet};
use flexsky::source::{AccessLog, Phase};
use flexsky::{
    pareto_dominates, Dataset, FdomCounter, Pull, SortedAccess, SortedSource, Spread,
    ThresholdPoint, WeightPolytope,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default)]
pub struct Report {
    pub checked: usize,
    pub failures: usize,
    /// The first few failures, described.
    pub samples: Vec<String>,
}

impl Report {
    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.samples.len() < 5 {
                self.samples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn assert_clean(&self, name: &str) {
        assert!(
            self.passed(),
            "{name}: {} violations in {} cases, first: {:?}",
            self.failures,
            self.checked,
            self.samples
        );
    }
}

pub const PAIRS: usize = 10_000;

const SPREADS: [Spread; 6] = [
    Spread::None,
    Spread::Ratio(0.01),
    Spread::Ratio(0.05),
    Spread::Ratio(0.2),
    Spread::Ratio(0.5),
    Spread::Full,
];

/// Values in [0, 1]; half the time snapped to a coarse grid so ties are common.
fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let coarse = rng.random_bool(0.5);
    (0..d)
        .map(|_| {
            let x: f64 = rng.random();
            if coarse {
                (x * 8.0).round() / 8.0
            } else {
                x
            }
        })
        .collect()
}

/// Either a ratio box or a random half-space cut of the simplex.
fn polytope(rng: &mut ChaCha8Rng, d: usize) -> WeightPolytope {
    if rng.random_bool(0.75) {
        WeightPolytope::from_epsilon(d, SPREADS[rng.random_range(0..SPREADS.len())]).unwrap()
    } else {
        let i = rng.random_range(0..d);
        let j = (i + 1 + rng.random_range(0..d - 1)) % d;
        let mut a = vec![0.0; d];
        a[i] = -1.0;
        a[j] = 1.0;
        WeightPolytope::from_constraints(d, &[Inequality::new(a, 0.0)], true).unwrap()
    }
}

fn dominates(p: &WeightPolytope, u: &[f64], v: &[f64]) -> bool {
    let mut c = FdomCounter::new();
    flexsky::f_dominates(u, v, p, &mut c).unwrap()
}

pub fn fdom_irreflexive(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    for _ in 0..PAIRS {
        let d = rng.random_range(2..=4);
        let p = polytope(&mut rng, d);
        let u = point(&mut rng, d);
        r.check(!dominates(&p, &u, &u), || format!("{u:?} dominates itself"));
    }
    r
}

/// Chains are drawn by drifting each point mostly upward, so the premise holds
/// often enough to exercise the implication. Some coordinates move down, which
/// yields pairs related by F-dominance but not by Pareto dominance.
pub fn fdom_transitive(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    let mut premises = 0;
    while premises < PAIRS {
        let d = rng.random_range(2..=4);
        let p = polytope(&mut rng, d);
        let u = point(&mut rng, d);
        let step = |x: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
            x.iter()
                .map(|&a| {
                    if rng.random_bool(0.3) {
                        a
                    } else {
                        (a + rng.random::<f64>() * 0.25 - 0.05).max(0.0)
                    }
                })
                .collect()
        };
        let v = step(&u, &mut rng);
        let w = step(&v, &mut rng);
        if dominates(&p, &u, &v) && dominates(&p, &v, &w) {
            premises += 1;
            r.check(dominates(&p, &u, &w), || {
                format!("{u:?} < {v:?} < {w:?} but not u < w")
            });
        }
    }
    r
}

pub fn fdom_pareto_collapse(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    for _ in 0..PAIRS {
        let d = rng.random_range(1..=5);
        let full = WeightPolytope::from_epsilon(d, Spread::Full).unwrap();
        let (u, v) = (point(&mut rng, d), point(&mut rng, d));
        let expected = pareto_dominates(&u, &v).unwrap();
        r.check(dominates(&full, &u, &v) == expected, || {
            format!("{u:?} vs {v:?}")
        });
    }
    r
}

pub fn fdom_singleton_collapse(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    for _ in 0..PAIRS {
        let d = rng.random_range(1..=5);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        let single = WeightPolytope::singleton(w.clone()).unwrap();
        let (u, v) = (point(&mut rng, d), point(&mut rng, d));
        let score = |x: &[f64]| -> f64 { w.iter().zip(x).map(|(a, b)| a * b).sum() };
        r.check(
            dominates(&single, &u, &v) == (score(&u) < score(&v)),
            || format!("{u:?} vs {v:?} under {w:?}"),
        );
    }
    r
}

/// Power-of-two factors keep every product exact, so the relation must not move.
pub fn fdom_scale_invariant(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    for _ in 0..PAIRS {
        let d = rng.random_range(2..=4);
        let p = polytope(&mut rng, d);
        let c = 2f64.powi(rng.random_range(-4..=4));
        let (u, v) = (point(&mut rng, d), point(&mut rng, d));
        let base = dominates(&p, &u, &v);
        let cu: Vec<f64> = u.iter().map(|x| x * c).collect();
        let cv: Vec<f64> = v.iter().map(|x| x * c).collect();
        let scaled = p.scaled(c).unwrap();
        r.check(
            dominates(&p, &cu, &cv) == base && dominates(&scaled, &u, &v) == base,
            || format!("{u:?} vs {v:?} at factor {c}"),
        );
    }
    r
}

/// A wider spread admits more functions, so it can only remove dominance pairs.
pub fn fdom_spread_nesting(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Report::default();
    for _ in 0..PAIRS {
        let d = rng.random_range(2..=4);
        let i = rng.random_range(0..SPREADS.len() - 1);
        let j = rng.random_range(i + 1..SPREADS.len());
        let narrow = WeightPolytope::from_epsilon(d, SPREADS[i]).unwrap();
        let wide = WeightPolytope::from_epsilon(d, SPREADS[j]).unwrap();
        let (u, v) = (point(&mut rng, d), point(&mut rng, d));
        r.check(
            !dominates(&wide, &u, &v) || dominates(&narrow, &u, &v),
            || {
                format!(
                    "{u:?} vs {v:?}: {} dominates but {} does not",
                    SPREADS[j], SPREADS[i]
                )
            },
        );
    }
    r
}

/// A small random instance in the style of the equivalence suite.
pub struct Instance {
    pub ds: Dataset,
    pub polytope: WeightPolytope,
    pub k: usize,
    pub mu: usize,
    pub label: String,
}

pub fn instances(seed: u64, count: usize, max_n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dist = if rng.random_bool(0.5) {
                Distribution::Uni
            } else {
                Distribution::Ant
            };
            let d = rng.random_range(2..=4);
            let n = rng.random_range(1..=max_n);
            let gen_seed = rng.random::<u32>() as u64;
            let ds = datagen::generate(&GenSpec::new(dist, n, d, gen_seed).unwrap()).unwrap();
            let polytope = polytope(&mut rng, d);
            let k = [1, 2, 5][rng.random_range(0..3)];
            let mu = [1, 10][rng.random_range(0..2)];
            Instance {
                label: format!(
                    "{dist} n={n} d={d} seed={gen_seed} k={k} mu={mu} |V|={}",
                    polytope.vertex_count()
                ),
                ds,
                polytope,
                k,
                mu,
            }
        })
        .collect()
}

impl Instance {
    pub fn config(&self) -> RunConfig {
        RunConfig::new(
            self.k,
            self.mu,
            self.polytope.clone(),
            self.ds.attr_max().to_vec(),
        )
        .unwrap()
    }
}

type PullLog = Rc<RefCell<HashSet<(String, usize)>>>;

/// A list that remembers every pair it hands out.
struct Recording {
    inner: SortedSource,
    attr: usize,
    pulled: PullLog,
}

impl SortedAccess for Recording {
    fn pull(&mut self) -> Pull {
        let p = self.inner.pull();
        if let Pull::Entry(id, _) = &p {
            self.pulled.borrow_mut().insert((id.clone(), self.attr));
        }
        p
    }

    fn depth(&self) -> u64 {
        self.inner.depth()
    }

    fn is_exhausted(&self) -> bool {
        self.inner.is_exhausted()
    }
}

/// Watches a run and checks every intermediate state against the full relation.
struct Auditor<'a> {
    inst: &'a Instance,
    truth: HashMap<&'a str, &'a [f64]>,
    nd: IdSet,
    pulled: PullLog,
    last_tau: Vec<f64>,
    stop: Option<GrowingStop>,
    known: HashSet<String>,
    arrivals: Vec<String>,
    report: &'a mut Report,
}

impl Auditor<'_> {
    fn check_buffer(&mut self, buffer: &Buffer, threshold: &ThresholdPoint) {
        let attr_max = self.inst.ds.attr_max();
        let label = &self.inst.label;
        let pulled = self.pulled.borrow();
        for t in buffer.iter() {
            let truth = self.truth[t.id.as_str()];
            let best = t.best_bound(threshold);
            let worst = t.worst_bound(attr_max);
            let sandwiched = (0..truth.len()).all(|i| best[i] <= truth[i] && truth[i] <= worst[i]);
            self.report.check(sandwiched, || {
                format!("{label}: {} bb {best:?} truth {truth:?} wb {worst:?}", t.id)
            });
            // Every known value came from a pull of that very list.
            let honest = t.slots().iter().enumerate().all(|(attr, s)| {
                s.is_none_or(|x| x == truth[attr] && pulled.contains(&(t.id.clone(), attr)))
            });
            self.report.check(honest, || {
                format!("{label}: {} slots {:?}", t.id, t.slots())
            });
        }
    }
}

impl RunObserver for Auditor<'_> {
    fn after_batch(
        &mut self,
        phase: Phase,
        buffer: &Buffer,
        threshold: &ThresholdPoint,
        _log: &AccessLog,
    ) {
        let tau = threshold.values().to_vec();
        let monotone = tau.iter().zip(&self.last_tau).all(|(a, b)| a >= b);
        let label = &self.inst.label;
        let last = &self.last_tau;
        self.report.check(monotone, || {
            format!("{label}: threshold {last:?} -> {tau:?}")
        });
        self.last_tau = tau;
        for t in buffer.iter() {
            if self.known.insert(t.id.clone()) && phase == Phase::Shrinking {
                self.arrivals.push(t.id.clone());
            }
        }
        self.check_buffer(buffer, threshold);
    }

    fn growing_done(&mut self, stop: GrowingStop, buffer: &Buffer, threshold: &ThresholdPoint) {
        self.stop = Some(stop);
        let label = &self.inst.label;
        for id in &self.nd {
            self.report.check(buffer.contains(id), || {
                format!("{label}: answer {id} unseen after growing")
            });
        }
        let (p, attr_max) = (&self.inst.polytope, self.inst.ds.attr_max());
        let mut c = FdomCounter::new();
        for t in buffer.iter() {
            let confirmed = buffer.confirmed_dominators(&t.id, p, attr_max, threshold, &mut c);
            let may = buffer.may_dominate_count(&t.id, p, attr_max, threshold, &mut c);
            self.report.check(may >= confirmed, || {
                format!("{label}: {} may {may:?} < confirmed {confirmed:?}", t.id)
            });
        }
    }

    fn after_prune(&mut self, pruned: &[String], buffer: &Buffer, threshold: &ThresholdPoint) {
        let label = &self.inst.label;
        for id in pruned {
            self.report.check(!self.nd.contains(id), || {
                format!("{label}: pruned answer {id}")
            });
        }
        // Late arrivals cannot outlive their first prune pass once the
        // threshold itself was dominated k times.
        if self.stop == Some(GrowingStop::Dominated) {
            for id in self.arrivals.drain(..) {
                self.report.check(!buffer.contains(&id), || {
                    format!("{label}: late arrival {id} kept")
                });
            }
        }
        self.check_buffer(buffer, threshold);
    }
}

/// Bound sandwich, threshold monotonicity, no wild guesses, prune safety,
/// absorption of late arrivals and may >= confirmed, over instrumented runs.
pub fn instrumented_runs(seed: u64, runs: usize) -> Report {
    let mut report = Report::default();
    for inst in instances(seed, runs, 150) {
        let nd = oracles::nd_k_bruteforce(&inst.ds, &inst.polytope, inst.k).unwrap();
        let truth = inst
            .ds
            .tuples()
            .iter()
            .map(|t| (t.id.as_str(), t.values.as_slice()))
            .collect();
        let pulled = PullLog::default();
        let mut sources: Vec<Recording> = inst
            .ds
            .vertical_partition()
            .into_iter()
            .enumerate()
            .map(|(attr, inner)| Recording {
                inner,
                attr,
                pulled: pulled.clone(),
            })
            .collect();
        let config = inst.config();
        let mut auditor = Auditor {
            inst: &inst,
            truth,
            nd: nd.clone(),
            pulled,
            last_tau: vec![0.0; inst.ds.dim()],
            stop: None,
            known: HashSet::new(),
            arrivals: Vec::new(),
            report: &mut report,
        };
        let out = nra::run_observed(&mut sources, &config, &mut auditor).unwrap();
        let got: IdSet = out.result.iter().map(|t| t.id.clone()).collect();
        report.check(got == nd, || {
            format!("{}: result differs from oracle", inst.label)
        });
    }
    report
}

/// With one weight vector and k = 1, the growing phase is plain NRA: stop at
/// the first depth where some seen tuple's worst score beats the threshold score.
pub fn scalar_nra_stop(seed: u64, count: usize) -> Report {
    let mut r = Report::default();
    for inst in instances(seed, count, 200) {
        let d = inst.ds.dim();
        let w = vec![1.0 / d as f64; d];
        let score = |x: &[f64]| -> f64 { w.iter().zip(x).map(|(a, b)| a * b).sum() };
        let max = inst.ds.attr_max();
        let lists: Vec<Vec<(String, f64)>> = inst
            .ds
            .vertical_partition()
            .into_iter()
            .map(|mut s| {
                std::iter::from_fn(|| match s.pull() {
                    Pull::Entry(id, v) => Some((id, v)),
                    Pull::Exhausted => None,
                })
                .collect()
            })
            .collect();
        let mut worst: HashMap<&str, Vec<f64>> = HashMap::new();
        let mut expected = inst.ds.len();
        for depth in 0..inst.ds.len() {
            for (attr, list) in lists.iter().enumerate() {
                worst
                    .entry(list[depth].0.as_str())
                    .or_insert_with(|| max.to_vec())[attr] = list[depth].1;
            }
            let tau: Vec<f64> = lists.iter().map(|l| l[depth].1).collect();
            if worst.values().any(|wb| score(wb) < score(&tau)) {
                expected = depth + 1;
                break;
            }
        }
        let single = WeightPolytope::singleton(w.clone()).unwrap();
        let config = RunConfig::new(1, 1, single, max.to_vec()).unwrap();
        let out = nra::run(&mut inst.ds.vertical_partition(), &config).unwrap();
        let got = out.metrics.max_growing_depth() as usize;
        r.check(got == expected, || {
            format!("{}: growing depth {got}, scalar NRA {expected}", inst.label)
        });
    }
    r
}

fn engine(inst: &Instance, polytope: &WeightPolytope, k: usize) -> IdSet {
    let config = RunConfig::new(k, inst.mu, polytope.clone(), inst.ds.attr_max().to_vec()).unwrap();
    let out = nra::run(&mut inst.ds.vertical_partition(), &config).unwrap();
    out.result.into_iter().map(|t| t.id).collect()
}

/// ND_k within ND_{k+1} within the (k+1)-skyband, through both the engine and the oracle.
pub fn containment_chains(seed: u64, count: usize) -> Report {
    let mut r = Report::default();
    for inst in instances(seed, count, 120) {
        let k = inst.k;
        let nd_k = engine(&inst, &inst.polytope, k);
        let nd_k1 = engine(&inst, &inst.polytope, k + 1);
        let band = oracles::skyband(&inst.ds, k + 1);
        let oracle_k = oracles::nd_k_bruteforce(&inst.ds, &inst.polytope, k).unwrap();
        let label = &inst.label;
        r.check(nd_k == oracle_k, || format!("{label}: engine != oracle"));
        r.check(nd_k.is_subset(&nd_k1), || {
            format!("{label}: ND_k not within ND_k+1")
        });
        r.check(nd_k1.is_subset(&band), || {
            format!("{label}: ND_k+1 not within skyband")
        });
    }
    r
}

/// Widening the spread can only grow the answer.
pub fn spread_nesting(seed: u64, count: usize) -> Report {
    let mut r = Report::default();
    for inst in instances(seed, count, 120) {
        let d = inst.ds.dim();
        let answers: Vec<IdSet> = SPREADS
            .iter()
            .map(|&s| engine(&inst, &WeightPolytope::from_epsilon(d, s).unwrap(), inst.k))
            .collect();
        for (i, pair) in answers.windows(2).enumerate() {
            r.check(pair[0].is_subset(&pair[1]), || {
                format!(
                    "{}: {} answer not within {}",
                    inst.label,
                    SPREADS[i],
                    SPREADS[i + 1]
                )
            });
        }
    }
    r
}

/// Joining the ranked lists on id gives back the relation.
pub fn partition_join(seed: u64, count: usize) -> Report {
    let mut r = Report::default();
    for inst in instances(seed, count, 200) {
        let mut joined: HashMap<String, Vec<Option<f64>>> = HashMap::new();
        let d = inst.ds.dim();
        for (attr, mut src) in inst.ds.vertical_partition().into_iter().enumerate() {
            let mut last = f64::NEG_INFINITY;
            while let Pull::Entry(id, v) = src.pull() {
                r.check(v >= last, || {
                    format!("{}: list {attr} out of order", inst.label)
                });
                last = v;
                joined.entry(id).or_insert_with(|| vec![None; d])[attr] = Some(v);
            }
        }
        r.check(joined.len() == inst.ds.len(), || {
            format!("{}: id count differs", inst.label)
        });
        for t in inst.ds.tuples() {
            let row: Option<Vec<f64>> = joined.get(&t.id).and_then(|s| s.iter().copied().collect());
            r.check(row.as_ref() == Some(&t.values), || {
                format!("{}: {} not rebuilt", inst.label, t.id)
            });
        }
    }
    r
}
