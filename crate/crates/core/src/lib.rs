//! Non-k-dominated flexible skylines (ND_k) over vertically partitioned
//! ranked lists, computed with sorted access only.
//!
//! * [`model`]: tuples, datasets, partial tuples and their bounds
//! * [`fdom`]: weight polytopes and F-dominance
//! * [`source`]: sorted-access sources and depth accounting
//! * [`nra`]: the two-phase engine
//! * [`oracles`]: brute-force references on materialized data
//! * [`datagen`]: UNI/ANT generators and file formats
//! * [`bench`]: verification suites and parameter sweeps
//!
//! The `parallel` feature (on by default) runs oracles, verification
//! suites and sweep cells on a rayon pool; without it everything runs on
//! the calling thread. A single engine run is always sequential.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod fdom;
pub mod fixtures;
pub mod model;
pub mod nra;
pub mod oracles;
pub mod source;

pub use error::{Error, Result};
pub use fdom::{f_dominates, pareto_dominates, FdomCounter, Spread, WeightPolytope};
pub use model::{Dataset, PartialTuple, ThresholdPoint, Tuple};
pub use nra::{run, RunConfig, RunMetrics, RunOutput};
pub use source::{sum_depths, AccessLog, Phase, Pull, SortedAccess, SortedSource};

/// Largest dimensionality accepted anywhere (vertex enumeration is exponential in it).
pub const MAX_DIM: usize = 6;
