//! Small hand-checked inputs shared by tests, benches and the CLI.

use crate::fdom::{Inequality, WeightPolytope};
use crate::model::{Dataset, Tuple};

/// Nine locations `a..i` with their distances to two points of interest.
pub fn nine_locations() -> Dataset {
    let rows = [
        ("a", 3.0, 8.0),
        ("b", 8.0, 6.0),
        ("c", 7.0, 3.0),
        ("d", 4.0, 9.0),
        ("e", 6.0, 2.0),
        ("f", 6.0, 9.0),
        ("g", 9.0, 1.5),
        ("h", 5.0, 7.0),
        ("i", 8.0, 1.0),
    ];
    let tuples = rows
        .iter()
        .map(|&(id, x, y)| Tuple::new(id, vec![x, y]))
        .collect();
    Dataset::new(2, tuples, Some(vec![9.0, 9.0])).expect("fixture is valid")
}

/// Normalized weights with `w1 >= w2`: vertices (0.5, 0.5) and (1, 0).
pub fn first_weight_dominant() -> WeightPolytope {
    WeightPolytope::from_constraints(2, &[Inequality::new(vec![-1.0, 1.0], 0.0)], true)
        .expect("fixture is valid")
}
