use ndarray::Array2;

use crate::disclosure::{nd_posterior, TabularRule};
use crate::model::JointModel;

/// Rearranges a rule into threshold form column by column.
///
/// Each column keeps its disclosed mass, so the non-disclosure value
/// posterior and the overall probability of sale are unchanged. Columns
/// below `x_nd` disclose their lowest profitabilities first, columns above
/// disclose their highest first, which can only raise the seller's payoff.
pub fn rearrange_to_threshold(m: &JointModel, d: &TabularRule) -> TabularRule {
    let x_nd = nd_posterior(m, d, m.mean_x()).x_nd;
    let (ny, nx) = (m.ny(), m.nx());
    let mass = m.mass();
    let mut out = Array2::zeros((ny, nx));
    for i in 0..nx {
        let mut budget: f64 = (0..ny).map(|j| mass[[j, i]] * d.get(j, i)).sum();
        let order: Vec<usize> = if m.x().points()[i] <= x_nd {
            (0..ny).collect()
        } else {
            (0..ny).rev().collect()
        };
        for j in order {
            let w = mass[[j, i]];
            if w <= 0.0 {
                // Massless cells keep their original entry.
                out[[j, i]] = d.get(j, i);
                continue;
            }
            let take = (budget / w).clamp(0.0, 1.0);
            out[[j, i]] = take;
            budget -= take * w;
            if budget <= 0.0 {
                budget = 0.0;
            }
        }
    }
    TabularRule::new(out).expect("fractions lie in [0, 1]")
}
