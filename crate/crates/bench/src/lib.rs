//! Shared fixtures for the benchmarks.

use motives_core::{DemandCurve, Grid1D, JointModel};

/// Independent uniform value on `[0.1, 1]` and profitability on `[0.1, 1]`.
pub fn uniform_model(n: usize) -> JointModel {
    JointModel::product(
        Grid1D::uniform(0.1, 1.0, n).expect("valid grid"),
        Grid1D::uniform(0.1, 1.0, n).expect("valid grid"),
    )
    .expect("valid model")
}

/// Profitability taking both signs.
pub fn signed_model(n: usize) -> JointModel {
    JointModel::product(
        Grid1D::uniform(0.0, 1.0, n).expect("valid grid"),
        Grid1D::uniform(-1.0, 1.0, n).expect("valid grid"),
    )
    .expect("valid model")
}

pub fn demands() -> Vec<(&'static str, DemandCurve)> {
    vec![
        ("linear", DemandCurve::linear()),
        ("square", DemandCurve::square()),
        ("sqrt", DemandCurve::sqrt()),
    ]
}
