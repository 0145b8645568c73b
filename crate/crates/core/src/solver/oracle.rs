use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threshold_from_anchors;
use crate::disclosure::{rasterize, seller_payoff, TabularRule};
use crate::error::{Error, Result};
use crate::model::{DemandCurve, JointModel};

/// Largest anchor grid the threshold oracle accepts per axis.
pub const MAX_ANCHOR_GRID: usize = 30;
/// Largest cell count for exhaustive {0,1} enumeration.
pub const MAX_TABULAR_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFamily {
    /// Binary threshold rules from an `n x n` grid of anchor pairs.
    ThresholdAnchors,
    /// Every {0,1} rule on the model grid.
    ExhaustiveTabular,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub rule: TabularRule,
    pub payoff: f64,
    /// Winning anchors for the threshold family.
    pub anchors: Option<(f64, f64)>,
    pub evaluated: usize,
}

/// Exact maximizer of the payoff within an enumerated rule family. Every
/// candidate is materialized and scored with `seller_payoff`.
pub fn brute_force_oracle(
    m: &JointModel,
    p: &DemandCurve,
    n: usize,
    family: OracleFamily,
) -> Result<OracleResult> {
    match family {
        OracleFamily::ThresholdAnchors => anchors(m, p, n),
        OracleFamily::ExhaustiveTabular => exhaustive(m, p),
    }
}

fn anchors(m: &JointModel, p: &DemandCurve, n: usize) -> Result<OracleResult> {
    if n == 0 || n > MAX_ANCHOR_GRID {
        return Err(Error::Budget(format!(
            "anchor grid {n} outside 1..={MAX_ANCHOR_GRID}"
        )));
    }
    let (xl, xh) = m.x().bounds();
    let (yl, yh) = m.y().bounds();
    let at = |k: usize, lo: f64, hi: f64| lo + (k as f64 + 0.5) / n as f64 * (hi - lo);
    let scored: Vec<Option<((f64, f64), TabularRule, f64)>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let a = (at(k / n, xl, xh), at(k % n, yl, yh));
            let t = threshold_from_anchors(a.0, a.1, p).ok()?;
            let d = rasterize(&t, m);
            let v = seller_payoff(m, &d, p).total;
            Some((a, d, v))
        })
        .collect();
    let evaluated = scored.iter().flatten().count();
    let best = scored
        .into_iter()
        .flatten()
        .reduce(|b, c| if c.2 > b.2 { c } else { b })
        .ok_or_else(|| Error::Input("no admissible anchor in the oracle grid".into()))?;
    Ok(OracleResult {
        rule: best.1,
        payoff: best.2,
        anchors: Some(best.0),
        evaluated,
    })
}

fn exhaustive(m: &JointModel, p: &DemandCurve) -> Result<OracleResult> {
    let (ny, nx) = (m.ny(), m.nx());
    let cells = nx * ny;
    if cells > MAX_TABULAR_CELLS {
        return Err(Error::Budget(format!(
            "{cells} cells means 2^{cells} rules; the limit is {MAX_TABULAR_CELLS} cells"
        )));
    }
    let rule = |bits: u32| {
        let d = Array2::from_shape_fn((ny, nx), |(j, i)| ((bits >> (j * nx + i)) & 1) as f64);
        TabularRule::new(d).expect("entries are 0 or 1")
    };
    let count = 1u32 << cells;
    let (bits, payoff) = (0..count)
        .into_par_iter()
        .map(|b| (b, seller_payoff(m, &rule(b), p).total))
        .reduce(
            || (u32::MAX, f64::NEG_INFINITY),
            |a, b| {
                // Keep the lowest bit pattern among ties so the result is order independent.
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(OracleResult {
        rule: rule(bits),
        payoff,
        anchors: None,
        evaluated: count as usize,
    })
}
