//! Optimal disclosure under commitment.
//!
//! The optimum is a threshold rule pinned down by its own non-disclosure
//! posterior, so the search runs over anchor pairs `(x_nd, y_nd)` and looks
//! for self-consistent ones.

mod evaluator;
mod foc;
mod oracle;
mod rearrange;

pub use foc::{foc_residual, FocReport};
pub use oracle::{brute_force_oracle, OracleFamily, OracleResult};
pub use rearrange::rearrange_to_threshold;

pub(crate) use evaluator::{AnchorEvaluator, Shape};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disclosure::{
    nd_posterior, rasterize_smooth, seller_payoff, NonDisclosurePosterior, Payoff, TabularRule,
    ThresholdRule, YBar,
};
use crate::error::{Error, Result};
use crate::model::{DemandCurve, JointModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Fixed-point tolerance, in units of the axis widths.
    pub tol: f64,
    pub max_iter: usize,
    /// Anchor grid resolution per axis for the initial sweep.
    pub anchor_grid: usize,
    /// Weight on the new iterate in the damped update.
    pub damping: f64,
    pub require_positive_profit_mean: bool,
    /// Extra uniformly drawn starting anchors.
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            anchor_grid: 25,
            damping: 0.5,
            require_positive_profit_mean: true,
            random_starts: 0,
            seed: 0,
        }
    }
}

/// A self-consistent anchor pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x_nd: f64,
    pub y_nd: f64,
    pub payoff: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub rule: ThresholdRule,
    /// Area rasterization of `rule` on the model grid.
    pub table: TabularRule,
    pub nd: NonDisclosurePosterior,
    pub payoff: Payoff,
    pub iterations: usize,
    pub residual: f64,
    /// Every distinct fixed point found, best first.
    pub candidates: Vec<FixedPoint>,
}

impl SolveResult {
    /// Anchors the rule was built from.
    pub fn anchors(&self) -> (f64, f64) {
        match &self.rule.y_bar {
            YBar::Anchored { x_nd, y_nd, .. } => (*x_nd, *y_nd),
            YBar::Constant(c) => (self.rule.x_bar, *c),
            YBar::Samples(_) => (self.rule.x_bar, self.nd.y_nd),
        }
    }
}

/// Threshold rule implied by the anchors: `x̄ = x_nd` and
/// `ȳ(x) = y_nd p'(x_nd)(x_nd - x) / (p(x_nd) - p(x))`, which is the
/// constant `y_nd` for affine demand.
pub fn threshold_from_anchors(x_nd: f64, y_nd: f64, p: &DemandCurve) -> Result<ThresholdRule> {
    if p.affine_coefficients().is_some() {
        return Ok(ThresholdRule::constant(x_nd, y_nd));
    }
    let d = p.derivative(x_nd);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Input(format!(
            "demand must be strictly increasing at the anchor: p'({x_nd}) = {d}"
        )));
    }
    Ok(ThresholdRule {
        x_bar: x_nd,
        y_bar: YBar::Anchored {
            x_nd,
            y_nd,
            demand: p.clone(),
        },
    })
}

struct Search<'a> {
    ev: &'a AnchorEvaluator<'a>,
    lo: (f64, f64),
    span: (f64, f64),
    cfg: &'a SolverConfig,
}

struct Track {
    a: (f64, f64),
    residual: f64,
    iterations: usize,
}

impl<'a> Search<'a> {
    fn new(ev: &'a AnchorEvaluator<'a>, cfg: &'a SolverConfig) -> Self {
        let (xl, xh) = ev.model().x().bounds();
        let (yl, yh) = ev.model().y().bounds();
        Self {
            ev,
            lo: (xl, yl),
            span: (axis_span(xl, xh), axis_span(yl, yh)),
            cfg,
        }
    }

    fn clamp(&self, a: (f64, f64)) -> (f64, f64) {
        (
            a.0.clamp(self.lo.0, self.lo.0 + self.span.0),
            a.1.clamp(self.lo.1, self.lo.1 + self.span.1),
        )
    }

    fn map(&self, a: (f64, f64)) -> (f64, f64) {
        let nd = self.ev.eval(a).nd;
        (nd.x_nd, nd.y_nd)
    }

    fn residual_of(&self, a: (f64, f64), t: (f64, f64)) -> f64 {
        ((t.0 - a.0).abs() / self.span.0).max((t.1 - a.1).abs() / self.span.1)
    }

    /// Damped iteration, then Newton with a finite-difference Jacobian.
    fn converge(&self, start: (f64, f64)) -> Track {
        let mut a = self.clamp(start);
        let mut best = Track {
            a,
            residual: f64::INFINITY,
            iterations: 0,
        };
        let lam = self.cfg.damping;
        let mut it = 0;
        while it < self.cfg.max_iter {
            let t = self.map(a);
            let r = self.residual_of(a, t);
            if r < best.residual {
                best = Track {
                    a,
                    residual: r,
                    iterations: it,
                };
            }
            if r < self.cfg.tol {
                return best;
            }
            a = self.clamp(((1.0 - lam) * a.0 + lam * t.0, (1.0 - lam) * a.1 + lam * t.1));
            it += 1;
        }
        let newton = self.newton(best.a, it);
        if newton.residual < best.residual {
            newton
        } else {
            best
        }
    }

    fn newton(&self, start: (f64, f64), offset: usize) -> Track {
        let f = |a: (f64, f64)| {
            let t = self.map(a);
            ((t.0 - a.0) / self.span.0, (t.1 - a.1) / self.span.1)
        };
        let norm = |v: (f64, f64)| v.0.abs().max(v.1.abs());
        let mut a = start;
        let mut fa = f(a);
        let mut it = 0;
        while it < 100 && norm(fa) >= self.cfg.tol {
            it += 1;
            let h = (1e-7 * self.span.0, 1e-7 * self.span.1);
            let f0 = f((a.0 + h.0, a.1));
            let f1 = f((a.0, a.1 + h.1));
            // Jacobian in normalized coordinates.
            let j = [
                [(f0.0 - fa.0) / 1e-7, (f1.0 - fa.0) / 1e-7],
                [(f0.1 - fa.1) / 1e-7, (f1.1 - fa.1) / 1e-7],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-14 || !det.is_finite() {
                break;
            }
            let s0 = -(j[1][1] * fa.0 - j[0][1] * fa.1) / det;
            let s1 = -(-j[1][0] * fa.0 + j[0][0] * fa.1) / det;
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-6 {
                let cand =
                    self.clamp((a.0 + step * s0 * self.span.0, a.1 + step * s1 * self.span.1));
                let fc = f(cand);
                if norm(fc) < norm(fa) {
                    a = cand;
                    fa = fc;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Track {
            a,
            residual: norm(fa),
            iterations: offset + it,
        }
    }

    /// Compass search for the payoff-maximizing anchors.
    fn climb(&self, start: (f64, f64), step0: f64) -> (f64, f64) {
        let mut a = start;
        let mut best = self.ev.eval(a).payoff;
        let mut step = step0;
        let mut evals = 0;
        while step > 1e-7 && evals < 4000 {
            let mut improved = false;
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let c = self.clamp((a.0 + dx * step * self.span.0, a.1 + dy * step * self.span.1));
                let v = self.ev.eval(c).payoff;
                evals += 1;
                if v > best + 1e-15 {
                    best = v;
                    a = c;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        a
    }
}

fn axis_span(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

/// Drives `start` towards a fixed point of the anchor map. Returns the
/// final anchors and their normalized residual.
pub(crate) fn refine_fixed_point(
    ev: &AnchorEvaluator<'_>,
    start: (f64, f64),
    cfg: &SolverConfig,
) -> ((f64, f64), f64) {
    let t = Search::new(ev, cfg).converge(start);
    (t.a, t.residual)
}

/// Finds the payoff-maximizing self-consistent threshold rule.
///
/// Anchors are swept on a grid, then refined from quantile seeds, the best
/// grid points, payoff hill-climbs and optional random starts. Each start
/// is driven to a fixed point by damped iteration with a Newton fallback.
pub fn solve_commitment(
    m: &JointModel,
    p: &DemandCurve,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if cfg.require_positive_profit_mean && !(m.mean_y() > 0.0) {
        return Err(Error::NonPositiveProfitMean(m.mean_y()));
    }
    if !(cfg.tol > 0.0) || cfg.anchor_grid == 0 || !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::Input(format!("invalid solver settings {cfg:?}")));
    }
    p.validate_on(m.x())?;

    let (xl, xh) = m.x().bounds();
    let (yl, yh) = m.y().bounds();
    let ev = AnchorEvaluator::new(m, p, Shape::Anchored);
    let search = Search::new(&ev, cfg);
    let at = |u: f64, v: f64| search.clamp((xl + u * (xh - xl), yl + v * (yh - yl)));

    let g = cfg.anchor_grid;
    let grid: Vec<(f64, f64)> = (0..g * g)
        .map(|k| {
            at(
                ((k / g) as f64 + 0.5) / g as f64,
                ((k % g) as f64 + 0.5) / g as f64,
            )
        })
        .collect();
    let mut scored: Vec<((f64, f64), f64)> = grid
        .par_iter()
        .map(|&a| (a, search.ev.eval(a).payoff))
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0 .0.total_cmp(&b.0 .0))
            .then(a.0 .1.total_cmp(&b.0 .1))
    });
    let top: Vec<(f64, f64)> = scored.iter().take(3).map(|s| s.0).collect();

    let mut seeds = Vec::new();
    for qx in [0.25, 0.5, 0.75] {
        for qy in [0.25, 0.5, 0.75] {
            seeds.push((m.x().quantile(qx), m.y().quantile(qy)));
        }
    }
    seeds.extend(top.iter().copied());
    let climbed: Vec<(f64, f64)> = top
        .par_iter()
        .map(|&a| search.climb(a, 1.0 / g as f64))
        .collect();
    seeds.extend(climbed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random_starts {
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        seeds.push(at(u, v));
    }

    let tracks: Vec<Track> = seeds.par_iter().map(|&s| search.converge(s)).collect();
    let total_iterations: usize = tracks.iter().map(|t| t.iterations).sum();

    let mut fixed: Vec<FixedPoint> = Vec::new();
    for t in tracks.iter().filter(|t| t.residual < cfg.tol) {
        let payoff = search.ev.eval(t.a).payoff;
        let dup = fixed
            .iter_mut()
            .find(|f| search.residual_of((f.x_nd, f.y_nd), t.a) < 1e-6);
        match dup {
            Some(f) if f.residual <= t.residual => {}
            Some(f) => {
                *f = FixedPoint {
                    x_nd: t.a.0,
                    y_nd: t.a.1,
                    payoff,
                    residual: t.residual,
                }
            }
            None => fixed.push(FixedPoint {
                x_nd: t.a.0,
                y_nd: t.a.1,
                payoff,
                residual: t.residual,
            }),
        }
    }
    fixed.sort_by(|a, b| {
        b.payoff
            .total_cmp(&a.payoff)
            .then(a.x_nd.total_cmp(&b.x_nd))
    });

    let build = |a: (f64, f64),
                 residual: f64,
                 iterations: usize,
                 candidates: Vec<FixedPoint>|
     -> Result<SolveResult> {
        let rule = threshold_from_anchors(a.0, a.1, p)?;
        let table = rasterize_smooth(&rule, m);
        let nd = nd_posterior(m, &table, m.mean_x());
        let payoff = seller_payoff(m, &table, p);
        Ok(SolveResult {
            rule,
            table,
            nd,
            payoff,
            iterations,
            residual,
            candidates,
        })
    };

    let Some(first) = fixed.first().copied() else {
        let best = tracks
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("at least one seed");
        let incumbent = build(best.a, best.residual, total_iterations, Vec::new())?;
        return Err(Error::NonConvergence {
            iterations: total_iterations,
            residual: best.residual,
            best: Box::new(incumbent),
        });
    };
    // Lexicographic choice: highest payoff, then smallest x̄ among ties.
    let chosen = fixed
        .iter()
        .filter(|f| f.payoff >= first.payoff - 1e-12)
        .min_by(|a, b| a.x_nd.total_cmp(&b.x_nd))
        .copied()
        .unwrap_or(first);

    let corner_full = seller_payoff(m, &TabularRule::full_disclosure(m), p).total;
    let corner_none = seller_payoff(m, &TabularRule::no_disclosure(m), p).total;
    if corner_full.max(corner_none) > chosen.payoff + 1e-9 {
        log::warn!(
            "a corner rule beats every fixed point found ({:.12} vs {:.12})",
            corner_full.max(corner_none),
            chosen.payoff
        );
    }
    log::debug!(
        "solve: {} fixed points, chosen ({:.9}, {:.9}) payoff {:.12}",
        fixed.len(),
        chosen.x_nd,
        chosen.y_nd,
        chosen.payoff
    );
    build(
        (chosen.x_nd, chosen.y_nd),
        chosen.residual,
        total_iterations,
        fixed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disclosure::rasterize;
    use crate::model::Grid1D;

    fn square(lo: f64, n: usize) -> JointModel {
        let g = Grid1D::uniform(lo, 1.0, n).unwrap();
        JointModel::product(g.clone(), g).unwrap()
    }

    #[test]
    fn anchors_give_constant_threshold_for_affine_demand() {
        let t = threshold_from_anchors(0.3, 0.7, &DemandCurve::affine(0.1, 0.5)).unwrap();
        assert!(t.is_constant());
        for x in [0.0, 0.2, 0.3, 0.9] {
            assert_eq!(t.y_bar_raw(x), 0.7);
        }
    }

    #[test]
    fn anchors_for_square_demand() {
        let t = threshold_from_anchors(0.6, 0.4, &DemandCurve::square()).unwrap();
        assert!((t.y_bar_raw(0.3) - 0.4 * 1.2 * 0.3 / (0.36 - 0.09)).abs() < 1e-12);
        assert!((t.y_bar_raw(0.3) - 0.533_333_333_333).abs() < 1e-9);
        assert!(threshold_from_anchors(0.0, 0.4, &DemandCurve::square()).is_err());
    }

    #[test]
    fn worked_example() {
        let m = square(0.0, 200);
        let r = solve_commitment(&m, &DemandCurve::linear(), &SolverConfig::default()).unwrap();
        assert!((r.rule.x_bar - 0.5).abs() < 1e-3);
        assert!((r.rule.y_bar_raw(0.3) - 0.5).abs() < 1e-3);
        assert!((r.payoff.total - 0.28125).abs() < 1e-3);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn result_is_self_consistent_and_beats_corners() {
        let m = square(0.1, 60);
        for p in [
            DemandCurve::square(),
            DemandCurve::sqrt(),
            DemandCurve::affine(0.2, 0.6),
        ] {
            let r = solve_commitment(&m, &p, &SolverConfig::default()).unwrap();
            let (a0, a1) = r.anchors();
            assert!(
                (r.nd.x_nd - a0).abs() < 1e-7 && (r.nd.y_nd - a1).abs() < 1e-7,
                "{p:?}"
            );
            let full = seller_payoff(&m, &TabularRule::full_disclosure(&m), &p).total;
            let none = seller_payoff(&m, &TabularRule::no_disclosure(&m), &p).total;
            assert!(r.payoff.total >= full.max(none) - 1e-9, "{p:?}");
            // Binary rasterization differs from the area version only on boundary cells.
            let b = seller_payoff(&m, &rasterize(&r.rule, &m), &p).total;
            assert!((b - r.payoff.total).abs() < 5e-3);
        }
    }

    #[test]
    fn rejects_nonpositive_profit_mean() {
        let m = JointModel::product(
            Grid1D::uniform(0.0, 1.0, 10).unwrap(),
            Grid1D::uniform(-1.0, 0.5, 10).unwrap(),
        )
        .unwrap();
        let r = solve_commitment(&m, &DemandCurve::linear(), &SolverConfig::default());
        assert!(matches!(r, Err(Error::NonPositiveProfitMean(_))));
    }

    #[test]
    fn rejects_decreasing_demand() {
        let m = square(0.0, 10);
        let r = solve_commitment(
            &m,
            &DemandCurve::affine(1.0, -0.5),
            &SolverConfig::default(),
        );
        assert!(matches!(r, Err(Error::NonIncreasingDemand { .. })));
    }

    #[test]
    fn seeded_random_starts_are_deterministic() {
        let m = square(0.1, 30);
        let cfg = SolverConfig {
            random_starts: 5,
            seed: 7,
            ..SolverConfig::default()
        };
        let a = solve_commitment(&m, &DemandCurve::sqrt(), &cfg).unwrap();
        let b = solve_commitment(&m, &DemandCurve::sqrt(), &cfg).unwrap();
        assert_eq!(a.anchors(), b.anchors());
        assert_eq!(a.payoff, b.payoff);
    }
}
