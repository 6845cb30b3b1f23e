//! Tuples, datasets and the partial knowledge the engine accumulates about them.
//!
//! Attribute values follow the cost convention: lower is better, and every
//! value is a finite non-negative real.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::SortedSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuple {
    pub id: String,
    pub values: Vec<f64>,
}

impl Tuple {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Tuple {
            id: id.into(),
            values,
        }
    }
}

/// A materialized relation with declared per-attribute maxima.
///
/// The maxima complete unseen attributes when computing worst bounds, so they
/// must dominate every stored value.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    tuples: Vec<Tuple>,
    attr_max: Vec<f64>,
}

impl Dataset {
    /// Validates `tuples` and builds a dataset. When `attr_max` is omitted the
    /// component-wise maximum over the tuples is used.
    pub fn new(dim: usize, tuples: Vec<Tuple>, attr_max: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if tuples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut ids = HashSet::with_capacity(tuples.len());
        for t in &tuples {
            if t.values.len() != dim {
                return Err(Error::DimensionMismatch {
                    id: t.id.clone(),
                    expected: dim,
                    got: t.values.len(),
                });
            }
            if let Some((attr, &value)) = t
                .values
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(Error::InvalidValue {
                    id: t.id.clone(),
                    attr,
                    value,
                });
            }
            if !ids.insert(t.id.as_str()) {
                return Err(Error::DuplicateId(t.id.clone()));
            }
        }

        let attr_max = match attr_max {
            Some(max) => {
                if max.len() != dim {
                    return Err(Error::InvalidAttrMax(format!(
                        "expected {dim} components, got {}",
                        max.len()
                    )));
                }
                if max.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidAttrMax("components must be finite".into()));
                }
                for t in &tuples {
                    for (attr, (&value, &m)) in t.values.iter().zip(&max).enumerate() {
                        if value > m {
                            return Err(Error::AboveMaximum {
                                id: t.id.clone(),
                                attr,
                                value,
                                max: m,
                            });
                        }
                    }
                }
                max
            }
            None => column_max(dim, &tuples),
        };

        Ok(Dataset {
            dim,
            tuples,
            attr_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn attr_max(&self) -> &[f64] {
        &self.attr_max
    }

    pub fn get(&self, id: &str) -> Option<&Tuple> {
        self.tuples.iter().find(|t| t.id == id)
    }

    /// Splits the relation into `d` ranked lists, one per attribute, each
    /// sorted ascending by value with ties broken by id.
    pub fn vertical_partition(&self) -> Vec<SortedSource> {
        (0..self.dim)
            .map(|attr| {
                let pairs = self
                    .tuples
                    .iter()
                    .map(|t| (t.id.clone(), t.values[attr]))
                    .collect();
                SortedSource::from_unsorted(pairs)
            })
            .collect()
    }
}

fn column_max(dim: usize, tuples: &[Tuple]) -> Vec<f64> {
    let mut max = vec![0.0_f64; dim];
    for t in tuples {
        for (m, &v) in max.iter_mut().zip(&t.values) {
            *m = m.max(v);
        }
    }
    max
}

/// A tuple known only through the sorted accesses made so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTuple {
    pub id: String,
    slots: Vec<Option<f64>>,
    /// Per-list depth of the access that first revealed the tuple.
    pub first_seen_depth: u64,
}

impl PartialTuple {
    pub fn new(id: impl Into<String>, dim: usize, attr: usize, value: f64, depth: u64) -> Self {
        let mut slots = vec![None; dim];
        slots[attr] = Some(value);
        PartialTuple {
            id: id.into(),
            slots,
            first_seen_depth: depth,
        }
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Option<f64>] {
        &self.slots
    }

    pub fn set(&mut self, attr: usize, value: f64) {
        self.slots[attr] = Some(value);
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    pub fn seen_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// Exact values, if every attribute has been seen.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.slots.iter().copied().collect()
    }

    /// Best completion: unseen attributes take the current threshold value,
    /// since no later entry of a list can be smaller than its last one.
    pub fn best_bound(&self, threshold: &ThresholdPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.best_bound_into(threshold.values(), &mut out);
        out
    }

    /// Worst completion: unseen attributes take the declared maximum.
    pub fn worst_bound(&self, attr_max: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.worst_bound_into(attr_max, &mut out);
        out
    }

    pub(crate) fn best_bound_into(&self, ell: &[f64], out: &mut [f64]) {
        for ((o, slot), &l) in out.iter_mut().zip(&self.slots).zip(ell) {
            *o = slot.unwrap_or(l);
        }
    }

    pub(crate) fn worst_bound_into(&self, attr_max: &[f64], out: &mut [f64]) {
        for ((o, slot), &m) in out.iter_mut().zip(&self.slots).zip(attr_max) {
            *o = slot.unwrap_or(m);
        }
    }
}

/// Last value extracted from each ranked list.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPoint {
    ell: Vec<f64>,
}

impl ThresholdPoint {
    /// Before any access every list could still yield a zero.
    pub fn new(dim: usize) -> Self {
        ThresholdPoint {
            ell: vec![0.0; dim],
        }
    }

    pub fn from_values(ell: Vec<f64>) -> Self {
        ThresholdPoint { ell }
    }

    pub fn values(&self) -> &[f64] {
        &self.ell
    }

    pub fn dim(&self) -> usize {
        self.ell.len()
    }

    pub(crate) fn advance(&mut self, attr: usize, value: f64) {
        debug_assert!(value >= self.ell[attr]);
        self.ell[attr] = value;
    }
}
