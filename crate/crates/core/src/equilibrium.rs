//! Voluntary disclosure without commitment: the seller discloses whenever
//! the buyer's belief after silence is worse for them than the truth.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::disclosure::TabularRule;
use crate::error::{Error, Result};
use crate::model::{DemandCurve, JointModel};
use crate::solver::{solve_commitment, AnchorEvaluator, Shape, SolverConfig};

/// Bracket width at which root bisection stops.
const BISECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UnravelFullDisclosure,
    PartialDisclosure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRoot {
    pub x_hat: f64,
    pub residual: f64,
    pub nd_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub regime: Regime,
    pub x_hat: f64,
    pub residual: f64,
    pub nd_mass: f64,
    /// Buyer's belief after non-disclosure. In the unravelling regime this
    /// is off-path and reported as the lowest value.
    pub nd_belief: f64,
    pub roots: Vec<EquilibriumRoot>,
}

/// `E[x | (x - x̂) y < 0] - x̂` and the mass of the conditioning event.
fn gap(ev: &AnchorEvaluator<'_>, x_hat: f64) -> Option<(f64, f64)> {
    let e = ev.eval((x_hat, 0.0));
    (e.nd.nd_mass > 0.0).then_some((e.nd.x_nd - x_hat, e.nd.nd_mass))
}

/// Equilibrium thresholds `x̂ = E[x | (x - x̂) y < 0]`.
///
/// One-signed profitability unravels to full disclosure. Otherwise the gap
/// is scanned over the value cell edges and every sign change is bisected.
/// The selected root has the largest non-disclosure mass, then the
/// smallest `x̂`.
pub fn solve_no_commitment(m: &JointModel) -> EquilibriumResult {
    let (xl, xh) = m.x().bounds();
    let charged: Vec<f64> = m
        .y()
        .points()
        .iter()
        .zip(m.y().weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&y, _)| y)
        .collect();
    let nonneg = charged.iter().all(|&y| y >= 0.0);
    let nonpos = charged.iter().all(|&y| y <= 0.0);
    if nonneg || nonpos {
        let x_hat = if nonneg { xl } else { xh };
        return EquilibriumResult {
            regime: Regime::UnravelFullDisclosure,
            x_hat,
            residual: 0.0,
            nd_mass: 0.0,
            nd_belief: xl,
            roots: vec![EquilibriumRoot {
                x_hat,
                residual: 0.0,
                nd_mass: 0.0,
            }],
        };
    }

    let p = DemandCurve::linear();
    let ev = AnchorEvaluator::new(m, &p, Shape::Constant);
    let edges = m.x().edges();
    let scan: Vec<(f64, Option<(f64, f64)>)> = edges.iter().map(|&x| (x, gap(&ev, x))).collect();
    let mut roots: Vec<EquilibriumRoot> = Vec::new();
    let mut push = |x_hat: f64| {
        if let Some((g, mass)) = gap(&ev, x_hat) {
            if roots.iter().all(|r| (r.x_hat - x_hat).abs() > 1e-9) {
                roots.push(EquilibriumRoot {
                    x_hat,
                    residual: g.abs(),
                    nd_mass: mass,
                });
            }
        }
    };
    for w in scan.windows(2) {
        let ((a, ga), (b, gb)) = (w[0], w[1]);
        let (Some((ga, _)), Some((gb, _))) = (ga, gb) else {
            continue;
        };
        if ga == 0.0 {
            push(a);
        }
        if gb == 0.0 {
            push(b);
        }
        if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                match gap(&ev, mid) {
                    Some((0.0, _)) => {
                        lo = mid;
                        hi = mid;
                    }
                    Some((g, _)) if (g < 0.0) == (glo < 0.0) => {
                        lo = mid;
                        glo = g;
                    }
                    Some(_) => hi = mid,
                    None => break,
                }
            }
            push(0.5 * (lo + hi));
        }
    }
    roots.sort_by(|a, b| a.x_hat.total_cmp(&b.x_hat));
    let best = roots
        .iter()
        .copied()
        .reduce(|b, r| if r.nd_mass > b.nd_mass + 1e-12 { r } else { b });
    match best {
        Some(r) => EquilibriumResult {
            regime: Regime::PartialDisclosure,
            x_hat: r.x_hat,
            residual: r.residual,
            nd_mass: r.nd_mass,
            nd_belief: r.x_hat,
            roots,
        },
        None => {
            // Only reachable when every scanned event is empty.
            log::warn!("no equilibrium threshold found by the scan");
            EquilibriumResult {
                regime: Regime::UnravelFullDisclosure,
                x_hat: xl,
                residual: 0.0,
                nd_mass: 0.0,
                nd_belief: xl,
                roots,
            }
        }
    }
}

/// Disclose iff `(x - x̂) y >= 0`; full disclosure when unravelling.
pub fn equilibrium_rule(res: &EquilibriumResult, m: &JointModel) -> TabularRule {
    if res.regime == Regime::UnravelFullDisclosure {
        return TabularRule::full_disclosure(m);
    }
    let (xs, ys) = (m.x().points(), m.y().points());
    let d = Array2::from_shape_fn((m.ny(), m.nx()), |(j, i)| {
        ((xs[i] - res.x_hat) * ys[j] >= 0.0) as u8 as f64
    });
    TabularRule::new(d).expect("entries are 0 or 1")
}

/// Seller best responses to a fixed non-disclosure belief; indifferent
/// sellers disclose.
pub fn best_response(m: &JointModel, p: &DemandCurve, belief: f64) -> TabularRule {
    let (xs, ys) = (m.x().points(), m.y().points());
    let p_nd = p.value(belief);
    let d = Array2::from_shape_fn((m.ny(), m.nx()), |(j, i)| {
        let gain = ys[j] * (p.value(xs[i]) - p_nd);
        (gain >= 0.0) as u8 as f64
    });
    TabularRule::new(d).expect("entries are 0 or 1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coincidence {
    pub coincide: bool,
    /// Profitability is degenerate at zero, so every threshold is consistent.
    pub degenerate: bool,
    pub commitment_anchors: Option<(f64, f64)>,
    pub equilibrium: EquilibriumResult,
}

/// Whether the optimal committed rule is also an equilibrium of the game
/// without commitment: its ȳ is zero and its x̄ is an equilibrium root.
pub fn commitment_coincidence(m: &JointModel, p: &DemandCurve) -> Result<Coincidence> {
    const TOL: f64 = 1e-6;
    if p.affine_coefficients().is_none() {
        return Err(Error::Unsupported(
            "coincidence check assumes affine demand".into(),
        ));
    }
    let equilibrium = solve_no_commitment(m);
    let degenerate = m
        .y()
        .points()
        .iter()
        .zip(m.y().weights())
        .all(|(&y, &w)| w == 0.0 || y == 0.0);
    if degenerate {
        return Ok(Coincidence {
            coincide: true,
            degenerate,
            commitment_anchors: None,
            equilibrium,
        });
    }
    let cfg = SolverConfig {
        require_positive_profit_mean: false,
        ..SolverConfig::default()
    };
    let solved = solve_commitment(m, p, &cfg)?;
    let (x_bar, y_bar) = solved.anchors();
    let coincide = equilibrium.regime == Regime::PartialDisclosure
        && y_bar.abs() <= TOL
        && equilibrium
            .roots
            .iter()
            .any(|r| (r.x_hat - x_bar).abs() <= TOL);
    Ok(Coincidence {
        coincide,
        degenerate,
        commitment_anchors: Some((x_bar, y_bar)),
        equilibrium,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationCertificate {
    /// Nothing to check: all values coincide.
    pub vacuous: bool,
    /// Number of candidate concealment sets examined.
    pub checked: usize,
}

#[derive(Debug, Clone)]
pub struct TransparentEquilibrium {
    pub rule: TabularRule,
    pub certificate: DeviationCertificate,
}

/// Full disclosure when the buyer sees profitability, with a certificate
/// that no concealment set survives: for every profitability level and every
/// set a seller there would want to pool (the lowest values when y > 0, the
/// highest when y < 0), its extreme member is strictly better off disclosing.
pub fn solve_no_commitment_transparent(m: &JointModel) -> Result<TransparentEquilibrium> {
    let rule = TabularRule::full_disclosure(m);
    let xs = m.x().points();
    let (xl, xh) = m.x().bounds();
    if xh <= xl {
        return Ok(TransparentEquilibrium {
            rule,
            certificate: DeviationCertificate {
                vacuous: true,
                checked: 0,
            },
        });
    }
    let mut checked = 0;
    for (j, &y) in m.y().points().iter().enumerate() {
        if y == 0.0 {
            continue;
        }
        let row = m.mass().row(j);
        let order: Vec<usize> = if y > 0.0 {
            (0..xs.len()).collect()
        } else {
            (0..xs.len()).rev().collect()
        };
        let (mut w, mut wx, mut atoms) = (0.0, 0.0, 0);
        for i in order {
            if row[i] <= 0.0 {
                continue;
            }
            w += row[i];
            wx += row[i] * xs[i];
            atoms += 1;
            if atoms < 2 {
                continue;
            }
            checked += 1;
            let pooled = wx / w;
            // The extreme member of the pool gains from disclosing.
            let deviates = if y > 0.0 {
                xs[i] > pooled
            } else {
                xs[i] < pooled
            };
            if !deviates {
                return Err(Error::Consistency(format!(
                    "concealment set ending at x = {} survives for y = {y}",
                    xs[i]
                )));
            }
        }
    }
    Ok(TransparentEquilibrium {
        rule,
        certificate: DeviationCertificate {
            vacuous: false,
            checked,
        },
    })
}
