use ndarray::Array2;

use crate::disclosure::{nd_posterior, NonDisclosurePosterior, TabularRule};
use crate::model::{DemandCurve, JointModel};

/// Marginal values smaller than this in magnitude count as zero.
const ZERO: f64 = 1e-12;

/// Per-cell signs of the payoff derivative with respect to disclosure.
#[derive(Debug, Clone)]
pub struct FocReport {
    pub nd: NonDisclosurePosterior,
    /// Sign of `y (p(x) - p(x_nd)) - y_nd p'(x_nd)(x - x_nd)`, indexed `[[y, x]]`.
    pub sign: Array2<i8>,
    /// Cells that are fractional or border a cell with a different value.
    pub boundary: Array2<bool>,
    /// Cells where the rule moves against the sign: concealing a positive
    /// cell or disclosing a negative one.
    pub violations: Vec<(usize, usize)>,
}

impl FocReport {
    pub fn violations_off_boundary(&self) -> usize {
        self.violations
            .iter()
            .filter(|&&(j, i)| !self.boundary[[j, i]])
            .count()
    }
}

/// Checks the first-order conditions of a candidate rule. Full disclosure
/// is allowed: the off-path posterior sits at `E(x)`.
pub fn foc_residual(m: &JointModel, d: &TabularRule, p: &DemandCurve) -> FocReport {
    let nd = nd_posterior(m, d, m.mean_x());
    let (xs, ys) = (m.x().points(), m.y().points());
    let (p_nd, dp_nd) = (p.value(nd.x_nd), p.derivative(nd.x_nd));
    let (ny, nx) = (m.ny(), m.nx());
    let sign = Array2::from_shape_fn((ny, nx), |(j, i)| {
        let g = ys[j] * (p.value(xs[i]) - p_nd) - nd.y_nd * dp_nd * (xs[i] - nd.x_nd);
        if g.abs() <= ZERO {
            0
        } else if g > 0.0 {
            1
        } else {
            -1
        }
    });
    let a = d.as_array();
    let boundary = Array2::from_shape_fn((ny, nx), |(j, i)| {
        let v = a[[j, i]];
        if v > 0.0 && v < 1.0 {
            return true;
        }
        let mut nb = Vec::with_capacity(4);
        if j > 0 {
            nb.push(a[[j - 1, i]]);
        }
        if j + 1 < ny {
            nb.push(a[[j + 1, i]]);
        }
        if i > 0 {
            nb.push(a[[j, i - 1]]);
        }
        if i + 1 < nx {
            nb.push(a[[j, i + 1]]);
        }
        nb.iter().any(|&w| w != v)
    });
    let violations = sign
        .indexed_iter()
        .filter(|&((j, i), &s)| (s > 0 && a[[j, i]] < 1.0) || (s < 0 && a[[j, i]] > 0.0))
        .map(|(c, _)| c)
        .collect();
    FocReport {
        nd,
        sign,
        boundary,
        violations,
    }
}
