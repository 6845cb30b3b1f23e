//! ND_k over ranked lists using sorted access only.
//!
//! The run has two phases. The growing phase pulls batches from every list
//! until `k` buffered tuples have a worst bound that F-dominates the
//! threshold point. No unseen tuple can beat the threshold, so after that
//! point unseen tuples are F-dominated by at least `k` others. The shrinking
//! phase repeatedly discards tuples certified to be F-dominated by `k` others
//! and keeps pulling while some survivor could still be F-dominated by `k`
//! buffered tuples.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fdom::{FdomCounter, WeightPolytope};
use crate::model::{PartialTuple, ThresholdPoint, Tuple};
use crate::source::{sum_depths, AccessLog, Phase, Pull, SortedAccess};

/// Deliberate defects for checking that verification catches a broken engine.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Prune tuples with `k - 1` confirmed dominators instead of `k`.
    PruneOffByOne,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub k: usize,
    pub mu: usize,
    pub polytope: WeightPolytope,
    pub attr_max: Vec<f64>,
    fault: Option<Fault>,
}

impl RunConfig {
    pub fn new(k: usize, mu: usize, polytope: WeightPolytope, attr_max: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if mu == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if attr_max.len() != polytope.dim() {
            return Err(Error::Config(format!(
                "{} attribute maxima for a {}-dimensional polytope",
                attr_max.len(),
                polytope.dim()
            )));
        }
        if attr_max.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidAttrMax(
                "components must be finite and non-negative".into(),
            ));
        }
        Ok(RunConfig {
            k,
            mu,
            polytope,
            attr_max,
            fault: None,
        })
    }

    #[doc(hidden)]
    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn dim(&self) -> usize {
        self.attr_max.len()
    }

    fn prune_threshold(&self) -> usize {
        match self.fault {
            Some(Fault::PruneOffByOne) => self.k - 1,
            None => self.k,
        }
    }
}

/// Seen, not yet discarded tuples in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Buffer {
    entries: IndexMap<String, PartialTuple>,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PartialTuple> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartialTuple> + '_ {
        self.entries.values()
    }

    /// Records `value` for attribute `attr` of `id`, creating the entry when the
    /// tuple is new.
    pub fn observe(
        &mut self,
        id: String,
        attr: usize,
        value: f64,
        dim: usize,
        depth: u64,
    ) -> Result<()> {
        match self.entries.get_mut(&id) {
            Some(t) => {
                if t.slots()[attr].is_some() {
                    return Err(Error::InconsistentSources(format!(
                        "`{id}` appears twice on list {}",
                        attr + 1
                    )));
                }
                t.set(attr, value);
            }
            None => {
                let t = PartialTuple::new(id.clone(), dim, attr, value, depth);
                self.entries.insert(id, t);
            }
        }
        Ok(())
    }

    /// Buffered tuples `t != s` whose worst bound F-dominates the best bound of
    /// `s`: these dominate `s` whatever their unseen values turn out to be.
    pub fn confirmed_dominators(
        &self,
        s: &str,
        polytope: &WeightPolytope,
        attr_max: &[f64],
        threshold: &ThresholdPoint,
        counter: &mut FdomCounter,
    ) -> Option<usize> {
        let target = self.entries.get(s)?.best_bound(threshold);
        let count = self
            .entries
            .values()
            .filter(|t| t.id != s)
            .filter(|t| counter.test(polytope, &t.worst_bound(attr_max), &target))
            .count();
        Some(count)
    }

    /// Buffered tuples `t != s` whose best bound F-dominates the worst bound of
    /// `s`: those that might still turn out to dominate it.
    pub fn may_dominate_count(
        &self,
        s: &str,
        polytope: &WeightPolytope,
        attr_max: &[f64],
        threshold: &ThresholdPoint,
        counter: &mut FdomCounter,
    ) -> Option<usize> {
        let target = self.entries.get(s)?.worst_bound(attr_max);
        let count = self
            .entries
            .values()
            .filter(|t| t.id != s)
            .filter(|t| counter.test(polytope, &t.best_bound(threshold), &target))
            .count();
        Some(count)
    }

    /// Worst and best bounds of every entry, flattened row-major.
    fn bound_matrices(&self, attr_max: &[f64], ell: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dim = attr_max.len();
        let mut worst = vec![0.0; self.len() * dim];
        let mut best = vec![0.0; self.len() * dim];
        for ((t, w), b) in self
            .entries
            .values()
            .zip(worst.chunks_exact_mut(dim))
            .zip(best.chunks_exact_mut(dim))
        {
            t.worst_bound_into(attr_max, w);
            t.best_bound_into(ell, b);
        }
        (worst, best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowingStop {
    /// `k` buffered worst bounds F-dominate the threshold point.
    Dominated,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub depth_growing: Vec<u64>,
    pub depth_shrinking: Vec<u64>,
    pub fdom_tests: u64,
    pub buffer_after_growing: usize,
    pub buffer_peak: usize,
    pub output_size: usize,
    pub growing_stop: GrowingStop,
    pub elapsed: Duration,
}

impl RunMetrics {
    pub fn depth_growing_total(&self) -> u64 {
        self.depth_growing.iter().sum()
    }

    pub fn depth_shrinking_total(&self) -> u64 {
        self.depth_shrinking.iter().sum()
    }

    pub fn sum_depths(&self) -> u64 {
        self.depth_growing_total() + self.depth_shrinking_total()
    }

    /// Deepest list; with round-robin access this is the uniform depth.
    pub fn max_depth(&self) -> u64 {
        self.depth_growing
            .iter()
            .zip(&self.depth_shrinking)
            .map(|(g, s)| g + s)
            .max()
            .unwrap_or(0)
    }

    pub fn max_growing_depth(&self) -> u64 {
        self.depth_growing.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: Vec<Tuple>,
    pub metrics: RunMetrics,
}

impl RunOutput {
    pub fn ids(&self) -> Vec<&str> {
        self.result.iter().map(|t| t.id.as_str()).collect()
    }

    /// JSON report: result tuples plus metrics.
    pub fn to_json(&self) -> serde_json::Value {
        let m = &self.metrics;
        serde_json::json!({
            "result": self.result,
            "depth": {
                "growing": m.depth_growing,
                "shrinking": m.depth_shrinking,
            },
            "sum_depths": m.sum_depths(),
            "max_depth": m.max_depth(),
            "fdom_tests": m.fdom_tests,
            "buffer_after_growing": m.buffer_after_growing,
            "buffer_peak": m.buffer_peak,
            "output_size": m.output_size,
            "growing_stop": m.growing_stop,
            "elapsed_ms": m.elapsed.as_secs_f64() * 1e3,
        })
    }
}

/// Hooks into a run, for instrumentation and tests. All methods default to no-ops.
pub trait RunObserver {
    /// After each batch of sorted accesses, before any check.
    fn after_batch(
        &mut self,
        _phase: Phase,
        _buffer: &Buffer,
        _threshold: &ThresholdPoint,
        _log: &AccessLog,
    ) {
    }

    fn growing_done(&mut self, _stop: GrowingStop, _buffer: &Buffer, _threshold: &ThresholdPoint) {}

    /// After each prune pass of the shrinking phase.
    fn after_prune(&mut self, _pruned: &[String], _buffer: &Buffer, _threshold: &ThresholdPoint) {}
}

impl RunObserver for () {}

/// State of one engine run over `sources`.
pub struct NraRun<'a, S> {
    sources: &'a mut [S],
    config: &'a RunConfig,
    buffer: Buffer,
    discarded: HashSet<String>,
    threshold: ThresholdPoint,
    log: AccessLog,
    counter: FdomCounter,
    buffer_peak: usize,
}

impl<'a, S: SortedAccess> NraRun<'a, S> {
    pub fn new(sources: &'a mut [S], config: &'a RunConfig) -> Result<Self> {
        let dim = config.dim();
        if sources.len() != dim {
            return Err(Error::Config(format!(
                "{} sources for a {dim}-dimensional configuration",
                sources.len()
            )));
        }
        Ok(NraRun {
            sources,
            config,
            buffer: Buffer::new(),
            discarded: HashSet::new(),
            threshold: ThresholdPoint::new(dim),
            log: AccessLog::new(dim),
            counter: FdomCounter::new(),
            buffer_peak: 0,
        })
    }

    pub fn buffer(&self) -> &Buffer {
        &self.buffer
    }

    pub fn threshold(&self) -> &ThresholdPoint {
        &self.threshold
    }

    pub fn log(&self) -> &AccessLog {
        &self.log
    }

    pub fn fdom_tests(&self) -> u64 {
        self.counter.count()
    }

    fn exhausted(&self) -> bool {
        self.sources.iter().all(S::is_exhausted)
    }

    /// Up to `mu` rounds of one pull per list. Returns whether anything was read.
    fn batch(&mut self, phase: Phase) -> Result<bool> {
        let dim = self.config.dim();
        let mut any = false;
        for _ in 0..self.config.mu {
            if self.exhausted() {
                break;
            }
            for attr in 0..dim {
                if let Pull::Entry(id, value) = self.sources[attr].pull() {
                    any = true;
                    self.log.record(attr, phase);
                    self.threshold.advance(attr, value);
                    if value > self.config.attr_max[attr] {
                        return Err(Error::AboveMaximum {
                            id,
                            attr,
                            value,
                            max: self.config.attr_max[attr],
                        });
                    }
                    if self.discarded.contains(&id) {
                        continue;
                    }
                    let depth = self.sources[attr].depth();
                    self.buffer.observe(id, attr, value, dim, depth)?;
                }
            }
        }
        self.buffer_peak = self.buffer_peak.max(self.buffer.len());
        Ok(any)
    }

    /// Whether `k` distinct buffered tuples have a worst bound F-dominating the threshold.
    fn threshold_dominated(&mut self) -> bool {
        let cfg = self.config;
        let tau = self.threshold.values();
        let mut worst = vec![0.0; cfg.dim()];
        let mut hits = 0;
        for t in self.buffer.iter() {
            t.worst_bound_into(&cfg.attr_max, &mut worst);
            if self.counter.test(&cfg.polytope, &worst, tau) {
                hits += 1;
                if hits == cfg.k {
                    return true;
                }
            }
        }
        false
    }

    pub fn growing_phase(&mut self, observer: &mut impl RunObserver) -> Result<GrowingStop> {
        let stop = loop {
            if self.exhausted() {
                break GrowingStop::Exhausted;
            }
            self.batch(Phase::Growing)?;
            observer.after_batch(Phase::Growing, &self.buffer, &self.threshold, &self.log);
            if self.threshold_dominated() {
                break GrowingStop::Dominated;
            }
        };
        observer.growing_done(stop, &self.buffer, &self.threshold);
        Ok(stop)
    }

    /// Removes every tuple with at least `k` confirmed dominators, counted
    /// against the buffer as it was when the pass started.
    fn prune(&mut self) -> Vec<String> {
        let cfg = self.config;
        let dim = cfg.dim();
        let limit = cfg.prune_threshold();
        let (worst, best) = self
            .buffer
            .bound_matrices(&cfg.attr_max, self.threshold.values());
        let n = self.buffer.len();
        let mut doomed = vec![false; n];
        for s in 0..n {
            let target = &best[s * dim..(s + 1) * dim];
            if limit == 0 {
                doomed[s] = true;
                continue;
            }
            let mut hits = 0;
            for t in (0..n).filter(|&t| t != s) {
                if self
                    .counter
                    .test(&cfg.polytope, &worst[t * dim..(t + 1) * dim], target)
                {
                    hits += 1;
                    if hits >= limit {
                        doomed[s] = true;
                        break;
                    }
                }
            }
        }

        let mut pruned = Vec::new();
        let mut flags = doomed.into_iter();
        self.buffer.entries.retain(|id, _| {
            let drop = flags.next().unwrap_or(false);
            if drop {
                pruned.push(id.clone());
            }
            !drop
        });
        self.discarded.extend(pruned.iter().cloned());
        pruned
    }

    /// Whether some buffered tuple is still unresolved: either `k` buffered
    /// tuples might F-dominate it, or its own values are not all known yet.
    fn needs_deepening(&mut self) -> bool {
        if self.buffer.iter().any(|t| !t.is_complete()) {
            return true;
        }
        let cfg = self.config;
        let dim = cfg.dim();
        let (worst, best) = self
            .buffer
            .bound_matrices(&cfg.attr_max, self.threshold.values());
        let n = self.buffer.len();
        for s in 0..n {
            let target = &worst[s * dim..(s + 1) * dim];
            let mut hits = 0;
            for t in (0..n).filter(|&t| t != s) {
                if self
                    .counter
                    .test(&cfg.polytope, &best[t * dim..(t + 1) * dim], target)
                {
                    hits += 1;
                    if hits >= cfg.k {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn shrinking_phase(&mut self, observer: &mut impl RunObserver) -> Result<()> {
        loop {
            let pruned = self.prune();
            observer.after_prune(&pruned, &self.buffer, &self.threshold);
            if self.exhausted() || !self.needs_deepening() {
                return Ok(());
            }
            self.batch(Phase::Shrinking)?;
            observer.after_batch(Phase::Shrinking, &self.buffer, &self.threshold, &self.log);
        }
    }
}

/// Computes ND_k from the given sources.
pub fn run<S: SortedAccess>(sources: &mut [S], config: &RunConfig) -> Result<RunOutput> {
    run_observed(sources, config, &mut ())
}

pub fn run_observed<S: SortedAccess>(
    sources: &mut [S],
    config: &RunConfig,
    observer: &mut impl RunObserver,
) -> Result<RunOutput> {
    let start = Instant::now();
    let mut state = NraRun::new(sources, config)?;
    let growing_stop = state.growing_phase(observer)?;
    let buffer_after_growing = state.buffer.len();
    let growing: Vec<u64> = state.log.growing().to_vec();
    state.shrinking_phase(observer)?;

    let mut result = Vec::with_capacity(state.buffer.len());
    for t in state.buffer.iter() {
        match t.values() {
            Some(values) => result.push(Tuple::new(t.id.clone(), values)),
            None => {
                return Err(Error::InconsistentSources(format!(
                    "`{}` is missing from some list",
                    t.id
                )))
            }
        }
    }
    debug_assert_eq!(
        sum_depths(&state.log),
        state.log.depths().iter().sum::<u64>()
    );

    let metrics = RunMetrics {
        depth_growing: growing,
        depth_shrinking: state.log.shrinking().to_vec(),
        fdom_tests: state.counter.count(),
        buffer_after_growing,
        buffer_peak: state.buffer_peak,
        output_size: result.len(),
        growing_stop,
        elapsed: start.elapsed(),
    };
    Ok(RunOutput { result, metrics })
}
