//! Families of linear scoring functions given as weight polytopes, and the
//! dominance tests they induce.
//!
//! A linear score `w . t` is monotone for non-negative weights. Over a
//! polytope `W`, both `max_w w.(u - v)` and `min_w w.(u - v)` are attained at
//! vertices, so checking the vertex list decides F-dominance exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MAX_DIM;

const TOL: f64 = 1e-9;

/// Spread of the ratio-bound box around the centroid weights `1/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spread {
    /// Only the centroid function: plain top-k.
    None,
    Ratio(f64),
    /// `eps = 1`: the box reaches the origin and dominance becomes Pareto dominance.
    Full,
}

impl Spread {
    pub fn ratio(eps: f64) -> Result<Self> {
        if eps == 0.0 {
            Ok(Spread::None)
        } else if eps > 0.0 && eps <= 1.0 {
            Ok(Spread::Ratio(eps))
        } else {
            Err(Error::InvalidSpread(eps.to_string()))
        }
    }

    pub fn epsilon(self) -> f64 {
        match self {
            Spread::None => 0.0,
            Spread::Ratio(e) => e,
            Spread::Full => 1.0,
        }
    }
}

impl FromStr for Spread {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Spread::None),
            "full" => Ok(Spread::Full),
            other => {
                let eps: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidSpread(s.to_string()))?;
                Spread::ratio(eps).map_err(|_| Error::InvalidSpread(s.to_string()))
            }
        }
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spread::None => f.write_str("none"),
            Spread::Ratio(e) => write!(f, "{e}"),
            Spread::Full => f.write_str("full"),
        }
    }
}

impl Serialize for Spread {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Spread {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(e) => Spread::ratio(e),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolytopeKind {
    EpsilonBox(Spread),
    HRep,
    Singleton,
    Vertices,
}

/// One linear constraint `a . w <= b` on the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Inequality {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Inequality { a, b }
    }
}

/// Constraint file contents: `{"dim": 2, "inequalities": [{"a": [-1, 1], "b": 0}], "normalize": true}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub dim: usize,
    #[serde(default)]
    pub inequalities: Vec<Inequality>,
    #[serde(default = "default_normalize")]
    pub normalize: bool,
}

fn default_normalize() -> bool {
    true
}

impl ConstraintSet {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_polytope(&self) -> Result<WeightPolytope> {
        WeightPolytope::from_constraints(self.dim, &self.inequalities, self.normalize)
    }
}

/// A closed bounded set of non-negative weight vectors, kept as its vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPolytope {
    dim: usize,
    kind: PolytopeKind,
    // row-major, one vertex per `dim` entries
    flat: Vec<f64>,
}

impl WeightPolytope {
    /// Ratio-bound box `prod_i [(1 - eps)/d, (1 + eps)/d]`, not normalized.
    pub fn from_epsilon(dim: usize, spread: Spread) -> Result<Self> {
        check_dim(dim)?;
        let eps = spread.epsilon();
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidSpread(spread.to_string()));
        }
        let centroid = 1.0 / dim as f64;
        let lo = centroid * (1.0 - eps);
        let hi = centroid * (1.0 + eps);
        let vertices = (0..1usize << dim)
            .map(|mask| {
                (0..dim)
                    .map(|i| if mask >> i & 1 == 1 { hi } else { lo })
                    .collect()
            })
            .collect();
        let kind = match spread {
            Spread::None => PolytopeKind::Singleton,
            s => PolytopeKind::EpsilonBox(s),
        };
        Self::build(dim, vertices, kind)
    }

    pub fn singleton(weights: Vec<f64>) -> Result<Self> {
        let dim = weights.len();
        check_dim(dim)?;
        Self::build(dim, vec![weights], PolytopeKind::Singleton)
    }

    pub fn from_vertices(dim: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(dim)?;
        Self::build(dim, vertices, PolytopeKind::Vertices)
    }

    /// Exact vertex enumeration of `{w >= 0, a.w <= b}` (plus `sum w = 1` when
    /// `normalize`): every `d`-subset of constraints is solved as equalities and
    /// feasible solutions are kept.
    pub fn from_constraints(
        dim: usize,
        inequalities: &[Inequality],
        normalize: bool,
    ) -> Result<Self> {
        check_dim(dim)?;
        for (i, ineq) in inequalities.iter().enumerate() {
            if ineq.a.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "inequality {i} has {} coefficients, expected {dim}",
                    ineq.a.len()
                )));
            }
            if !ineq.b.is_finite() || ineq.a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPolytope(format!(
                    "inequality {i} is not finite"
                )));
            }
        }

        let mut rows: Vec<Inequality> = inequalities.to_vec();
        for i in 0..dim {
            let mut a = vec![0.0; dim];
            a[i] = -1.0;
            rows.push(Inequality::new(a, 0.0));
        }
        let equality = normalize.then(|| Inequality::new(vec![1.0; dim], 1.0));

        let vertices = enumerate_vertices(dim, &rows, equality.as_ref());
        if vertices.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if !normalize {
            // The region is bounded iff its recession cone {y >= 0, a.y <= 0} is {0},
            // i.e. iff no direction on the unit simplex satisfies the homogeneous system.
            let cone: Vec<Inequality> = rows
                .iter()
                .map(|r| Inequality::new(r.a.clone(), 0.0))
                .collect();
            let simplex = Inequality::new(vec![1.0; dim], 1.0);
            if !enumerate_vertices(dim, &cone, Some(&simplex)).is_empty() {
                return Err(Error::UnboundedRegion);
            }
        }
        Self::build(dim, vertices, PolytopeKind::HRep)
    }

    fn build(dim: usize, vertices: Vec<Vec<f64>>, kind: PolytopeKind) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidPolytope("no vertices".into()));
        }
        let mut unique: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "vertex has {} components, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidPolytope(format!(
                    "vertex {v:?} has a negative or non-finite weight"
                )));
            }
            if !unique.iter().any(|u| approx_eq(u, &v)) {
                unique.push(v);
            }
        }
        if unique.iter().all(|v| v.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidPolytope("all weights are zero".into()));
        }
        unique.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(WeightPolytope {
            dim,
            kind,
            flat: unique.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &PolytopeKind {
        &self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.flat.len() / self.dim
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.flat.chunks_exact(self.dim)
    }

    /// Every vertex multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let vertices = self
            .vertices()
            .map(|v| v.iter().map(|x| x * factor).collect())
            .collect();
        Self::build(self.dim, vertices, self.kind.clone())
    }

    /// `u` F-dominates `v`: no vertex scores `u` worse, and some vertex scores it
    /// strictly better. Dimensions are the caller's responsibility.
    #[inline]
    pub fn dominates(&self, u: &[f64], v: &[f64]) -> bool {
        debug_assert_eq!(u.len(), self.dim);
        debug_assert_eq!(v.len(), self.dim);
        let mut strict = false;
        for w in self.flat.chunks_exact(self.dim) {
            let (mut su, mut sv) = (0.0, 0.0);
            for ((wi, ui), vi) in w.iter().zip(u).zip(v) {
                su += wi * ui;
                sv += wi * vi;
            }
            if su > sv {
                return false;
            }
            strict |= su < sv;
        }
        strict
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::ZeroDimension)
    } else if dim > MAX_DIM {
        Err(Error::TooManyDimensions(dim))
    } else {
        Ok(())
    }
}

fn approx_eq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TOL)
}

fn enumerate_vertices(
    dim: usize,
    rows: &[Inequality],
    equality: Option<&Inequality>,
) -> Vec<Vec<f64>> {
    let free = dim - usize::from(equality.is_some());
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::with_capacity(free);
    for_each_subset(rows.len(), free, &mut chosen, &mut |subset| {
        let mut system: Vec<&Inequality> = subset.iter().map(|&i| &rows[i]).collect();
        if let Some(eq) = equality {
            system.push(eq);
        }
        let Some(mut w) = solve(dim, &system) else {
            return;
        };
        let feasible = rows.iter().all(|r| dot(&r.a, &w) <= r.b + TOL)
            && equality.is_none_or(|eq| (dot(&eq.a, &w) - eq.b).abs() <= TOL);
        if !feasible {
            return;
        }
        for x in &mut w {
            if x.abs() <= TOL {
                *x = 0.0;
            }
        }
        if !out.iter().any(|u| approx_eq(u, &w)) {
            out.push(w);
        }
    });
    out
}

fn for_each_subset(n: usize, size: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == size {
        f(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&i| i + 1);
    let remaining = size - chosen.len();
    for i in start..n {
        if n - i < remaining {
            break;
        }
        chosen.push(i);
        for_each_subset(n, size, chosen, f);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting on a square system; `None` when singular.
fn solve(dim: usize, system: &[&Inequality]) -> Option<Vec<f64>> {
    debug_assert_eq!(system.len(), dim);
    let mut m: Vec<Vec<f64>> = system
        .iter()
        .map(|r| {
            let mut row = r.a.clone();
            row.push(r.b);
            row
        })
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        let pivot_row = m[col].clone();
        for (row, r) in m.iter_mut().enumerate() {
            if row != col {
                let factor = r[col] / pivot_row[col];
                if factor != 0.0 {
                    for (x, p) in r.iter_mut().zip(&pivot_row).skip(col) {
                        *x -= factor * p;
                    }
                }
            }
        }
    }
    Some((0..dim).map(|i| m[i][dim] / m[i][i]).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of F-dominance tests performed during one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FdomCounter {
    count: u64,
}

impl FdomCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Counted form of [`WeightPolytope::dominates`].
    #[inline]
    pub fn test(&mut self, polytope: &WeightPolytope, u: &[f64], v: &[f64]) -> bool {
        self.count += 1;
        polytope.dominates(u, v)
    }
}

/// Checked F-dominance test; bumps `counter` by one.
pub fn f_dominates(
    u: &[f64],
    v: &[f64],
    polytope: &WeightPolytope,
    counter: &mut FdomCounter,
) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::VectorDimension(u.len(), v.len()));
    }
    if u.len() != polytope.dim() {
        return Err(Error::VectorDimension(u.len(), polytope.dim()));
    }
    Ok(counter.test(polytope, u, v))
}

/// Pareto dominance: `u <= v` everywhere and `u < v` somewhere.
pub fn pareto_dominates(u: &[f64], v: &[f64]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::VectorDimension(u.len(), v.len()));
    }
    Ok(pareto(u, v))
}

#[inline]
pub(crate) fn pareto(u: &[f64], v: &[f64]) -> bool {
    let mut strict = false;
    for (a, b) in u.iter().zip(v) {
        if a > b {
            return false;
        }
        strict |= a < b;
    }
    strict
}
