//! The benchmark where the buyer also sees profitability: one disclosure
//! problem per profitability level.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::disclosure::{
    buyer_posterior_distribution, seller_payoff, PosteriorDistribution, TabularRule,
};
use crate::error::{Error, Result};
use crate::informativeness::{completion_score, default_tolerance, mps_compare, MpsVerdict};
use crate::model::{classify_curvature, Curvature, DemandCurve, JointModel};
use crate::solver::SolveResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PerYPolicy {
    Conceal,
    Disclose,
    /// Canonical full disclosure for a seller who is indifferent.
    DiscloseIndifferent,
    /// Disclose the values at or above `cut` (or at or below, if `upper` is false).
    Sanitize {
        cut: f64,
        upper: bool,
    },
}

#[derive(Debug, Clone)]
pub struct TransparentSolution {
    pub rule: TabularRule,
    pub policy: Vec<PerYPolicy>,
    /// Value posterior after non-disclosure for each profitability cell.
    pub x_nd: Vec<f64>,
    /// `y P(y)` for each profitability cell.
    pub per_y_payoff: Vec<f64>,
    pub total_value: f64,
}

impl TransparentSolution {
    pub fn buyer_posterior(&self, m: &JointModel) -> PosteriorDistribution {
        transparent_buyer_posterior(m, &self.rule)
    }
}

/// Row-wise non-disclosure posterior and sale probability.
fn row_outcome(m: &JointModel, p: &DemandCurve, j: usize, d: &[f64]) -> Option<(f64, f64)> {
    let xs = m.x().points();
    let row = m.mass().row(j);
    let total: f64 = row.sum();
    if !(total > 0.0) {
        return None;
    }
    let (mut w, mut wx) = (0.0, 0.0);
    for i in 0..xs.len() {
        let c = row[i] * (1.0 - d[i]);
        w += c;
        wx += c * xs[i];
    }
    let x_nd = if w > 0.0 {
        wx / w
    } else {
        row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>() / total
    };
    let p_nd = p.value(x_nd);
    let sale: f64 = (0..xs.len())
        .map(|i| row[i] * (d[i] * p.value(xs[i]) + (1.0 - d[i]) * p_nd))
        .sum::<f64>()
        / total;
    Some((x_nd, sale))
}

fn effective_curvature(m: &JointModel, p: &DemandCurve) -> Curvature {
    match p.curvature() {
        Curvature::Other => classify_curvature(p, m.x()),
        c => c,
    }
}

/// Optimal transparent policy, one profitability level at a time.
///
/// Concave `sign(y) p` conceals everything, convex discloses everything, and
/// affine demand discloses canonically. Otherwise every upper and lower
/// sanitization cut is tried and the best is kept.
pub fn solve_transparent(m: &JointModel, p: &DemandCurve) -> TransparentSolution {
    let (ny, nx) = (m.ny(), m.nx());
    let curv = effective_curvature(m, p);
    let mut rule = Array2::zeros((ny, nx));
    let mut policy = Vec::with_capacity(ny);
    let mut x_nd = Vec::with_capacity(ny);
    let mut per_y = Vec::with_capacity(ny);
    for (j, &y) in m.y().points().iter().enumerate() {
        let sign = if y > 0.0 {
            1.0
        } else if y < 0.0 {
            -1.0
        } else {
            0.0
        };
        let (pol, d): (PerYPolicy, Vec<f64>) = if sign == 0.0 {
            (PerYPolicy::DiscloseIndifferent, vec![1.0; nx])
        } else {
            match curv.signed(sign) {
                Curvature::StrictlyConcave => (PerYPolicy::Conceal, vec![0.0; nx]),
                Curvature::StrictlyConvex => (PerYPolicy::Disclose, vec![1.0; nx]),
                Curvature::Affine => (PerYPolicy::DiscloseIndifferent, vec![1.0; nx]),
                Curvature::Other => best_cut(m, p, j, sign),
            }
        };
        let (xnd, sale) = row_outcome(m, p, j, &d).unwrap_or((m.mean_x(), 0.0));
        for i in 0..nx {
            rule[[j, i]] = d[i];
        }
        policy.push(pol);
        x_nd.push(xnd);
        per_y.push(y * sale);
    }
    let total_value = per_y.iter().zip(m.y().weights()).map(|(v, w)| v * w).sum();
    TransparentSolution {
        rule: TabularRule::new(rule).expect("entries are 0 or 1"),
        policy,
        x_nd,
        per_y_payoff: per_y,
        total_value,
    }
}

fn best_cut(m: &JointModel, p: &DemandCurve, j: usize, sign: f64) -> (PerYPolicy, Vec<f64>) {
    let xs = m.x().points();
    let nx = xs.len();
    let mut best: Option<(f64, PerYPolicy, Vec<f64>)> = None;
    for upper in [true, false] {
        for k in 0..=nx {
            let d: Vec<f64> = (0..nx)
                .map(|i| {
                    if (upper && i >= k) || (!upper && i < k) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let Some((_, sale)) = row_outcome(m, p, j, &d) else {
                return (PerYPolicy::DiscloseIndifferent, vec![1.0; nx]);
            };
            let cut = if upper {
                xs.get(k).copied().unwrap_or(f64::INFINITY)
            } else if k == 0 {
                f64::NEG_INFINITY
            } else {
                xs[k - 1]
            };
            let v = sign * sale;
            if best.as_ref().map_or(true, |b| v > b.0 + 1e-15) {
                best = Some((v, PerYPolicy::Sanitize { cut, upper }, d));
            }
        }
    }
    let (_, pol, d) = best.expect("at least one cut");
    (pol, d)
}

/// Payoff when the buyer sees profitability: `Σ_y F_Y(y) y P_y(d)` with the
/// non-disclosure posterior computed separately for each y.
pub fn transparent_value(m: &JointModel, p: &DemandCurve, d: &TabularRule) -> f64 {
    let (ys, fy) = (m.y().points(), m.y().weights());
    (0..m.ny())
        .filter_map(|j| {
            let row: Vec<f64> = d.as_array().row(j).to_vec();
            row_outcome(m, p, j, &row).map(|(_, sale)| fy[j] * ys[j] * sale)
        })
        .sum()
}

/// `τ Π¹(d) + (1 - τ) Π⁰(d)`.
pub fn mixed_objective_value(
    m: &JointModel,
    p: &DemandCurve,
    d: &TabularRule,
    tau: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let hidden = if tau < 1.0 {
        seller_payoff(m, d, p).total
    } else {
        0.0
    };
    let open = if tau > 0.0 {
        transparent_value(m, p, d)
    } else {
        0.0
    };
    Ok(tau * open + (1.0 - tau) * hidden)
}

/// F^B when the buyer sees y: each row pools its concealed cells separately.
pub fn transparent_buyer_posterior(m: &JointModel, d: &TabularRule) -> PosteriorDistribution {
    let xs = m.x().points();
    let mut atoms = Vec::with_capacity(m.nx() * m.ny() + m.ny());
    for j in 0..m.ny() {
        let (mut w, mut wx) = (0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            let mass = m.mass()[[j, i]];
            let dd = d.get(j, i);
            atoms.push((x, mass * dd));
            w += mass * (1.0 - dd);
            wx += mass * (1.0 - dd) * x;
        }
        if w > 0.0 {
            atoms.push((wx / w, w));
        }
    }
    PosteriorDistribution::from_atoms(atoms).expect("a rule always induces a distribution")
}

/// Runs the MPS comparison with the hidden-motives F^B first.
pub fn compare_informativeness(
    m: &JointModel,
    hidden: &SolveResult,
    transparent: &TransparentSolution,
) -> Result<MpsVerdict> {
    let g = buyer_posterior_distribution(m, &hidden.table);
    let h = transparent.buyer_posterior(m);
    let v = mps_compare(&g, &h, default_tolerance(&g, &h));
    if v.mean_mismatch {
        return Err(Error::Consistency(format!(
            "buyer posteriors disagree on the mean: {} vs {}",
            g.mean(),
            h.mean()
        )));
    }
    Ok(v)
}

/// One line of the regime comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub regime: String,
    pub sale_prob: f64,
    pub payoff: f64,
    pub fb_variance: f64,
    pub verdict: String,
}

pub fn comparison_rows(
    m: &JointModel,
    p: &DemandCurve,
    hidden: &SolveResult,
    transparent: &TransparentSolution,
) -> Result<Vec<ComparisonRow>> {
    let v = compare_informativeness(m, hidden, transparent)?;
    let verdict = v.relation.as_str().to_owned();
    let fy = m.y().weights();
    let sale_t: f64 = (0..m.ny())
        .filter_map(|j| {
            let row: Vec<f64> = transparent.rule.as_array().row(j).to_vec();
            row_outcome(m, p, j, &row).map(|(_, s)| fy[j] * s)
        })
        .sum();
    Ok(vec![
        ComparisonRow {
            regime: "hidden".into(),
            sale_prob: hidden.payoff.sale_prob,
            payoff: hidden.payoff.total,
            fb_variance: completion_score(&buyer_posterior_distribution(m, &hidden.table)),
            verdict: verdict.clone(),
        },
        ComparisonRow {
            regime: "transparent".into(),
            sale_prob: sale_t,
            payoff: transparent.total_value,
            fb_variance: completion_score(&transparent.buyer_posterior(m)),
            verdict,
        },
    ])
}
