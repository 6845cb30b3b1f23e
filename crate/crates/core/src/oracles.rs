//! Brute-force reference answers computed on the materialized relation.
//!
//! These read tuples directly, which the engine never may; they exist to
//! check it. Each counting oracle has a sequential and (with the `parallel`
//! feature) a rayon implementation. The unsuffixed entry points pick the
//! parallel one when it is compiled in.

use std::collections::{BTreeSet, HashMap};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdom::{pareto, WeightPolytope};
use crate::model::{Dataset, Tuple};

pub type IdSet = BTreeSet<String>;

/// Ids of tuples dominated (under `dominates(s, t)`) by fewer than `k` others.
fn survivors_seq(ds: &Dataset, k: usize, dominates: impl Fn(&[f64], &[f64]) -> bool) -> IdSet {
    let tuples = ds.tuples();
    tuples
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            let mut hits = 0;
            for (j, s) in tuples.iter().enumerate() {
                if j != *i && dominates(&s.values, &t.values) {
                    hits += 1;
                    if hits >= k {
                        return false;
                    }
                }
            }
            true
        })
        .map(|(_, t)| t.id.clone())
        .collect()
}

#[cfg(feature = "parallel")]
fn survivors_par(
    ds: &Dataset,
    k: usize,
    dominates: impl Fn(&[f64], &[f64]) -> bool + Sync,
) -> IdSet {
    let tuples = ds.tuples();
    tuples
        .par_iter()
        .enumerate()
        .filter(|(i, t)| {
            let mut hits = 0;
            for (j, s) in tuples.iter().enumerate() {
                if j != *i && dominates(&s.values, &t.values) {
                    hits += 1;
                    if hits >= k {
                        return false;
                    }
                }
            }
            true
        })
        .map(|(_, t)| t.id.clone())
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn survivors(ds: &Dataset, k: usize, dominates: impl Fn(&[f64], &[f64]) -> bool + Sync) -> IdSet {
    #[cfg(feature = "parallel")]
    {
        survivors_par(ds, k, dominates)
    }
    #[cfg(not(feature = "parallel"))]
    {
        survivors_seq(ds, k, dominates)
    }
}

pub fn skyline(ds: &Dataset) -> IdSet {
    skyband(ds, 1)
}

/// Tuples Pareto-dominated by fewer than `k` others.
pub fn skyband(ds: &Dataset, k: usize) -> IdSet {
    survivors(ds, k, pareto)
}

/// Tuples of rank at most `k` under the linear score `weights . t`, where
/// rank is one plus the number of strictly better scores. Ties at the
/// boundary are all kept.
pub fn top_k(ds: &Dataset, weights: &[f64], k: usize) -> Result<IdSet> {
    if weights.len() != ds.dim() {
        return Err(Error::VectorDimension(weights.len(), ds.dim()));
    }
    let score = |v: &[f64]| -> f64 { weights.iter().zip(v).map(|(w, x)| w * x).sum() };
    let scores: Vec<f64> = ds.tuples().iter().map(|t| score(&t.values)).collect();
    let mut ordered = scores.clone();
    ordered.sort_by(f64::total_cmp);
    Ok(ds
        .tuples()
        .iter()
        .zip(&scores)
        .filter(|(_, s)| ordered.partition_point(|x| x < s) < k)
        .map(|(t, _)| t.id.clone())
        .collect())
}

/// Tuples F-dominated by fewer than `k` others.
pub fn nd_k_bruteforce(ds: &Dataset, polytope: &WeightPolytope, k: usize) -> Result<IdSet> {
    check_dims(ds, polytope)?;
    Ok(survivors(ds, k, |s, t| polytope.dominates(s, t)))
}

pub fn nd_k_bruteforce_seq(ds: &Dataset, polytope: &WeightPolytope, k: usize) -> Result<IdSet> {
    check_dims(ds, polytope)?;
    Ok(survivors_seq(ds, k, |s, t| polytope.dominates(s, t)))
}

#[cfg(feature = "parallel")]
pub fn nd_k_bruteforce_par(ds: &Dataset, polytope: &WeightPolytope, k: usize) -> Result<IdSet> {
    check_dims(ds, polytope)?;
    Ok(survivors_par(ds, k, |s, t| polytope.dominates(s, t)))
}

fn check_dims(ds: &Dataset, polytope: &WeightPolytope) -> Result<()> {
    if ds.dim() != polytope.dim() {
        Err(Error::VectorDimension(ds.dim(), polytope.dim()))
    } else {
        Ok(())
    }
}

/// Smallest uniform depth at which `k` seen tuples have a worst bound
/// F-dominating the threshold point, replayed directly on the relation.
/// Returns the relation size when that never happens.
pub fn min_stop_depth(
    ds: &Dataset,
    polytope: &WeightPolytope,
    k: usize,
    attr_max: &[f64],
) -> Result<usize> {
    check_dims(ds, polytope)?;
    if attr_max.len() != ds.dim() {
        return Err(Error::VectorDimension(attr_max.len(), ds.dim()));
    }
    let dim = ds.dim();
    let n = ds.len();
    let columns: Vec<Vec<(&str, f64)>> = (0..dim)
        .map(|attr| {
            let mut col: Vec<(&str, f64)> = ds
                .tuples()
                .iter()
                .map(|t| (t.id.as_str(), t.values[attr]))
                .collect();
            col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
            col
        })
        .collect();

    let mut seen: HashMap<&str, Vec<f64>> = HashMap::new();
    for depth in 1..=n {
        for (attr, col) in columns.iter().enumerate() {
            let (id, v) = col[depth - 1];
            seen.entry(id).or_insert_with(|| attr_max.to_vec())[attr] = v;
        }
        let tau: Vec<f64> = columns.iter().map(|c| c[depth - 1].1).collect();
        let hits = seen
            .values()
            .filter(|wb| polytope.dominates(wb, &tau))
            .count();
        if hits >= k {
            return Ok(depth);
        }
    }
    Ok(n)
}

/// Whether the growing-phase stop condition holds after `depth` rounds of one
/// access per list, recomputed from scratch.
pub fn stop_condition_at(
    ds: &Dataset,
    polytope: &WeightPolytope,
    k: usize,
    attr_max: &[f64],
    depth: usize,
) -> Result<bool> {
    check_dims(ds, polytope)?;
    if attr_max.len() != ds.dim() {
        return Err(Error::VectorDimension(attr_max.len(), ds.dim()));
    }
    if depth == 0 {
        return Ok(false);
    }
    let depth = depth.min(ds.len());
    let mut tau = Vec::with_capacity(ds.dim());
    let mut seen: HashMap<&str, Vec<f64>> = HashMap::new();
    for attr in 0..ds.dim() {
        let mut col: Vec<&Tuple> = ds.tuples().iter().collect();
        col.sort_by(|a, b| {
            a.values[attr]
                .total_cmp(&b.values[attr])
                .then(a.id.cmp(&b.id))
        });
        for t in &col[..depth] {
            seen.entry(t.id.as_str())
                .or_insert_with(|| attr_max.to_vec())[attr] = t.values[attr];
        }
        tau.push(col[depth - 1].values[attr]);
    }
    Ok(seen
        .values()
        .filter(|wb| polytope.dominates(wb, &tau))
        .count()
        >= k)
}
