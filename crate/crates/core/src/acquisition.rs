//! Choosing signal precision when the buyer sees profitability with
//! probability τ. Demand is affine throughout.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::disclosure::{buyer_posterior_distribution, PosteriorDistribution, ThresholdRule};
use crate::error::{Error, Result};
use crate::informativeness::{
    completion_score, default_tolerance, mps_compare, MpsRelation, MpsVerdict,
};
use crate::model::{DemandCurve, JointModel, SignalFamily};
use crate::solver::{
    refine_fixed_point, solve_commitment, AnchorEvaluator, Shape, SolveResult, SolverConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub solver: SolverConfig,
    /// Evenly spaced precisions sampled before the line search.
    pub samples: usize,
    /// Final bracket width of the golden-section search.
    pub golden_tol: f64,
    /// Grid size used when the sampled curve is not unimodal.
    pub dense_grid: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            samples: 11,
            golden_tol: 1e-4,
            dense_grid: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuePoint {
    pub theta: f64,
    /// Hidden-motives value Π̄₀(θ).
    pub pi0: f64,
    /// Transparent value Π̄₁(θ).
    pub pi1: f64,
    pub cost: f64,
    pub net: f64,
}

#[derive(Debug, Clone)]
pub struct AcquisitionResult {
    pub tau: f64,
    pub theta_star: f64,
    pub rule: ThresholdRule,
    pub solve: Arc<SolveResult>,
    pub pi0: f64,
    pub pi1: f64,
    pub gross_value: f64,
    pub net_value: f64,
    pub value_curve: Vec<ValuePoint>,
    pub unimodal: bool,
    /// Buyer's distribution of posterior means under the optimal signal and rule.
    pub fb: PosteriorDistribution,
}

fn affine(p: &DemandCurve) -> Result<(f64, f64)> {
    p.affine_coefficients().ok_or_else(|| {
        Error::Unsupported("precision choice is only modelled for affine demand".into())
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Π̄₁ for affine demand: `a E(y) + b E[y E(x|y)]`, whatever the rule.
pub fn transparent_value_affine(m: &JointModel, p: &DemandCurve) -> Result<f64> {
    let (a, b) = affine(p)?;
    Ok(a * m.mean_y() + b * m.mean_xy())
}

/// Memoized per-precision solves for one family and demand curve.
pub struct PrecisionValues<'a> {
    fam: &'a SignalFamily,
    p: &'a DemandCurve,
    cfg: &'a AcquisitionConfig,
    cache: Mutex<HashMap<u64, Arc<SolveResult>>>,
}

impl<'a> PrecisionValues<'a> {
    pub fn new(
        fam: &'a SignalFamily,
        p: &'a DemandCurve,
        cfg: &'a AcquisitionConfig,
    ) -> Result<Self> {
        affine(p)?;
        Ok(Self {
            fam,
            p,
            cfg,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn solve(&self, theta: f64) -> Result<Arc<SolveResult>> {
        if let Some(r) = self.cache.lock().expect("cache lock").get(&theta.to_bits()) {
            return Ok(r.clone());
        }
        let m = self.fam.model_at(theta)?;
        let r = Arc::new(solve_commitment(&m, self.p, &self.cfg.solver)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(theta.to_bits(), r.clone());
        Ok(r)
    }

    pub fn pi0(&self, theta: f64) -> Result<f64> {
        Ok(self.solve(theta)?.payoff.total)
    }

    pub fn pi1(&self, theta: f64) -> Result<f64> {
        transparent_value_affine(&self.fam.model_at(theta)?, self.p)
    }

    /// `τ Π̄₁(θ) + (1 - τ) Π̄₀(θ)`; skips the commitment solve when τ = 1.
    pub fn gross(&self, theta: f64, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let pi1 = self.pi1(theta)?;
        if tau == 1.0 {
            return Ok(pi1);
        }
        Ok(tau * pi1 + (1.0 - tau) * self.pi0(theta)?)
    }

    pub fn net(&self, theta: f64, tau: f64) -> Result<f64> {
        Ok(self.gross(theta, tau)? - self.fam.cost_at(theta))
    }

    pub fn point(&self, theta: f64, tau: f64) -> Result<ValuePoint> {
        let (pi0, pi1) = (self.pi0(theta)?, self.pi1(theta)?);
        let cost = self.fam.cost_at(theta);
        Ok(ValuePoint {
            theta,
            pi0,
            pi1,
            cost,
            net: tau * pi1 + (1.0 - tau) * pi0 - cost,
        })
    }
}

/// Gross value of precision `theta` at transparency `tau`.
pub fn value_of_precision(
    fam: &SignalFamily,
    p: &DemandCurve,
    theta: f64,
    tau: f64,
) -> Result<f64> {
    let cfg = AcquisitionConfig::default();
    PrecisionValues::new(fam, p, &cfg)?.gross(theta, tau)
}

fn is_unimodal(v: &[f64]) -> bool {
    let tol = 1e-12;
    let mut k = 0;
    while k + 1 < v.len() && v[k + 1] >= v[k] - tol {
        k += 1;
    }
    while k + 1 < v.len() && v[k + 1] <= v[k] + tol {
        k += 1;
    }
    k + 1 == v.len()
}

fn golden(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Maximizes `τ Π̄₁(θ) + (1 - τ) Π̄₀(θ) - c(θ)` over the precision domain.
pub fn optimize_precision(
    fam: &SignalFamily,
    p: &DemandCurve,
    tau: f64,
    cfg: &AcquisitionConfig,
) -> Result<AcquisitionResult> {
    let values = PrecisionValues::new(fam, p, cfg)?;
    optimize_with(&values, tau)
}

/// As [`optimize_precision`], reusing cached solves across calls.
pub fn optimize_with(values: &PrecisionValues<'_>, tau: f64) -> Result<AcquisitionResult> {
    check_tau(tau)?;
    let cfg = values.cfg;
    let (lo, hi) = values.fam.domain();
    let k = cfg.samples.max(3);
    let thetas: Vec<f64> = (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect();
    let curve = thetas
        .iter()
        .map(|&t| values.point(t, tau))
        .collect::<Result<Vec<_>>>()?;
    let nets: Vec<f64> = curve.iter().map(|v| v.net).collect();
    let unimodal = is_unimodal(&nets);

    // Candidates are (theta, net); ties go to the smaller theta.
    let mut cands: Vec<(f64, f64)> = thetas.iter().copied().zip(nets.iter().copied()).collect();
    let f = |t: f64| values.net(t, tau);
    if unimodal {
        let best = (0..k).fold(0, |b, i| if nets[i] > nets[b] { i } else { b });
        let a = thetas[best.saturating_sub(1)];
        let b = thetas[(best + 1).min(k - 1)];
        cands.push(golden(&f, a, b, cfg.golden_tol)?);
    } else {
        log::warn!("value of precision is not unimodal at tau = {tau}; using a dense grid");
        let n = cfg.dense_grid.max(2);
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            cands.push((t, f(t)?));
        }
    }
    let (theta_star, net_value) =
        cands
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |b, c| {
                if c.1 > b.1 + 1e-15 || (c.1 >= b.1 - 1e-15 && c.0 < b.0) {
                    c
                } else {
                    b
                }
            });
    let solve = values.solve(theta_star)?;
    let m = values.fam.model_at(theta_star)?;
    let pi1 = values.pi1(theta_star)?;
    let fb = buyer_posterior_distribution(&m, &solve.table);
    Ok(AcquisitionResult {
        tau,
        theta_star,
        rule: solve.rule.clone(),
        pi0: solve.payoff.total,
        pi1,
        gross_value: net_value + values.fam.cost_at(theta_star),
        net_value,
        solve,
        value_curve: curve,
        unimodal,
        fb,
    })
}

/// One row of a transparency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub theta_star: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub net_value: f64,
    pub fb_variance: f64,
}

pub fn sweep(
    fam: &SignalFamily,
    p: &DemandCurve,
    taus: &[f64],
    cfg: &AcquisitionConfig,
) -> Result<Vec<SweepRow>> {
    let values = PrecisionValues::new(fam, p, cfg)?;
    taus.iter()
        .map(|&tau| {
            let r = optimize_with(&values, tau)?;
            Ok(SweepRow {
                tau,
                theta_star: r.theta_star,
                pi0: r.pi0,
                pi1: r.pi1,
                net_value: r.net_value,
                fb_variance: completion_score(&r.fb),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub regular: bool,
    /// One representative per root cluster of the moment equations.
    pub roots: Vec<(f64, f64)>,
}

impl Regularity {
    pub fn anchor(&self) -> Option<(f64, f64)> {
        self.regular.then(|| self.roots[0])
    }
}

/// Solves `E[x | (x - x̂)(y - ŷ) < 0] = x̂` and `E[y | same] = ŷ` by a
/// residual sign scan on a 41 x 41 anchor grid, Newton refinement in each
/// flagged cell and clustering within two scan cells. Regular means exactly
/// one interior cluster.
pub fn check_regular(m: &JointModel) -> Regularity {
    const N: usize = 41;
    let (xl, xh) = m.x().bounds();
    let (yl, yh) = m.y().bounds();
    if !(xh > xl && yh > yl) {
        return Regularity {
            regular: false,
            roots: Vec::new(),
        };
    }
    let p = DemandCurve::linear();
    let ev = AnchorEvaluator::new(m, &p, Shape::Constant);
    let (hx, hy) = ((xh - xl) / (N - 1) as f64, (yh - yl) / (N - 1) as f64);
    let at = |i: usize, j: usize| (xl + i as f64 * hx, yl + j as f64 * hy);
    let resid: Vec<Vec<(f64, f64)>> = (0..N)
        .map(|i| {
            (0..N)
                .map(|j| {
                    let a = at(i, j);
                    let e = ev.eval(a);
                    if e.nd.nd_mass > 0.0 {
                        (e.nd.x_nd - a.0, e.nd.y_nd - a.1)
                    } else {
                        (f64::NAN, f64::NAN)
                    }
                })
                .collect()
        })
        .collect();
    let cfg = SolverConfig::default();
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for i in 0..N - 1 {
        for j in 0..N - 1 {
            let c = [
                resid[i][j],
                resid[i + 1][j],
                resid[i][j + 1],
                resid[i + 1][j + 1],
            ];
            if c.iter().any(|r| r.0.is_nan()) {
                continue;
            }
            let spans = |f: fn(&(f64, f64)) -> f64| {
                let v: Vec<f64> = c.iter().map(f).collect();
                v.iter().cloned().fold(f64::INFINITY, f64::min) <= 0.0
                    && v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= 0.0
            };
            if !(spans(|r| r.0) && spans(|r| r.1)) {
                continue;
            }
            let centre = (xl + (i as f64 + 0.5) * hx, yl + (j as f64 + 0.5) * hy);
            let (a, r) = refine_fixed_point(&ev, centre, &cfg);
            let interior = a.0 > xl + hx && a.0 < xh - hx && a.1 > yl + hy && a.1 < yh - hy;
            let near = (a.0 - centre.0).abs() <= 1.5 * hx && (a.1 - centre.1).abs() <= 1.5 * hy;
            if r < cfg.tol && interior && near && ev.eval(a).nd.nd_mass > 0.0 {
                let clustered = roots
                    .iter()
                    .any(|b| (b.0 - a.0).abs() <= 2.0 * hx && (b.1 - a.1).abs() <= 2.0 * hy);
                if !clustered {
                    roots.push(a);
                }
            }
        }
    }
    Regularity {
        regular: roots.len() == 1,
        roots,
    }
}

fn reflection_symmetric(points: &[f64], weights: &[f64]) -> bool {
    let tol = 1e-9;
    let atoms: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .filter(|a| a.1 > 1e-15)
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if total <= 0.0 {
        return true;
    }
    let mu: f64 = atoms.iter().map(|a| a.0 * a.1).sum::<f64>() / total;
    let n = atoms.len();
    let scale = points.last().unwrap() - points[0];
    (0..n).all(|k| {
        let (a, b) = (atoms[k], atoms[n - 1 - k]);
        (a.0 + b.0 - 2.0 * mu).abs() <= tol * scale.max(1.0) && (a.1 - b.1).abs() / total <= tol
    })
}

/// Every conditional of x given y and of y given x is symmetric about its mean.
pub fn check_symmetric(m: &JointModel) -> bool {
    let mass = m.mass();
    (0..m.ny()).all(|j| reflection_symmetric(m.x().points(), &mass.row(j).to_vec()))
        && (0..m.nx()).all(|i| reflection_symmetric(m.y().points(), &mass.column(i).to_vec()))
}

#[derive(Debug, Clone)]
pub struct TauComparison {
    /// Lower-τ F^B compared with higher-τ F^B.
    pub verdict: MpsVerdict,
    pub lo: AcquisitionResult,
    pub hi: AcquisitionResult,
    /// Both optimal signals are regular and symmetric.
    pub regular_symmetric: bool,
    /// The higher-τ F^B is a strict spread of the lower-τ one.
    pub hi_strictly_more_informative: bool,
}

/// Compares the buyer's information at two transparency levels.
///
/// Fails with a consistency error when both optimal signals are regular and
/// symmetric but the lower-τ F^B is not a spread of the higher-τ one.
pub fn compare_across_tau(
    fam: &SignalFamily,
    p: &DemandCurve,
    tau_hi: f64,
    tau_lo: f64,
    cfg: &AcquisitionConfig,
) -> Result<TauComparison> {
    if !(tau_hi > tau_lo) {
        return Err(Error::Input(format!(
            "need tau_hi > tau_lo, got {tau_hi} and {tau_lo}"
        )));
    }
    let values = PrecisionValues::new(fam, p, cfg)?;
    let hi = optimize_with(&values, tau_hi)?;
    let lo = optimize_with(&values, tau_lo)?;
    let verdict = mps_compare(&lo.fb, &hi.fb, default_tolerance(&lo.fb, &hi.fb));
    let ok = |t: f64| -> Result<bool> {
        let m = fam.model_at(t)?;
        Ok(check_symmetric(&m) && check_regular(&m).regular)
    };
    let regular_symmetric = ok(lo.theta_star)? && ok(hi.theta_star)?;
    if regular_symmetric && !matches!(verdict.relation, MpsRelation::MpsOf | MpsRelation::Equal) {
        return Err(Error::Consistency(format!(
            "regular symmetric signals but F^B at tau {tau_lo} is {:?} relative to tau {tau_hi}",
            verdict.relation
        )));
    }
    Ok(TauComparison {
        hi_strictly_more_informative: verdict.relation == MpsRelation::MpsBy,
        verdict,
        lo,
        hi,
        regular_symmetric,
    })
}

/// Whether the completion score of the optimally disclosed F^B weakly
/// increases with precision on the given grid.
pub fn precision_is_beneficial(
    fam: &SignalFamily,
    p: &DemandCurve,
    thetas: &[f64],
    cfg: &AcquisitionConfig,
) -> Result<bool> {
    let values = PrecisionValues::new(fam, p, cfg)?;
    let mut scores = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let m = fam.model_at(t)?;
        scores.push(completion_score(&buyer_posterior_distribution(
            &m,
            &values.solve(t)?.table,
        )));
    }
    Ok(scores.windows(2).all(|w| w[1] >= w[0] - 1e-12))
}
