//! Mean-preserving spreads and completions of the Blackwell order for
//! distributions of posterior means.

use serde::{Deserialize, Serialize};

use crate::disclosure::PosteriorDistribution;
use crate::model::DemandCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpsRelation {
    /// The first distribution is a mean-preserving spread of the second.
    MpsOf,
    /// The second distribution is a mean-preserving spread of the first.
    MpsBy,
    Equal,
    Incomparable,
}

impl MpsRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            MpsRelation::MpsOf => "mps_of",
            MpsRelation::MpsBy => "mps_by",
            MpsRelation::Equal => "equal",
            MpsRelation::Incomparable => "incomparable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpsVerdict {
    pub relation: MpsRelation,
    /// How far the reported relation (or, if incomparable, the closer of
    /// the two directions) is from holding exactly.
    pub max_violation: f64,
    /// Largest absolute partial integral of the cdf difference; positive
    /// for strict spreads.
    pub dominance_gap: f64,
    pub mean_mismatch: bool,
}

/// Default dominance slack: `1e-9` times the width of the merged support.
pub fn default_tolerance(g: &PosteriorDistribution, h: &PosteriorDistribution) -> f64 {
    let (a, b) = (g.support(), h.support());
    1e-9 * (a.1.max(b.1) - a.0.min(b.0)).max(f64::MIN_POSITIVE)
}

/// Compares `g` and `h` through `I(t) = ∫ (F_g - F_h)` on the merged
/// support. Both cdfs are step functions, so `I` is piecewise linear and
/// its extremes sit on support points.
pub fn mps_compare(g: &PosteriorDistribution, h: &PosteriorDistribution, tol: f64) -> MpsVerdict {
    if (g.mean() - h.mean()).abs() > tol {
        return MpsVerdict {
            relation: MpsRelation::Incomparable,
            max_violation: (g.mean() - h.mean()).abs(),
            dominance_gap: 0.0,
            mean_mismatch: true,
        };
    }
    let mut pts: Vec<f64> = g.atoms().iter().chain(h.atoms()).map(|a| a.0).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let (ga, ha) = (g.atoms(), h.atoms());
    let (mut gi, mut hi) = (0, 0);
    let (mut fg, mut fh) = (0.0, 0.0);
    let (mut integral, mut lo, mut up) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..pts.len() {
        while gi < ga.len() && ga[gi].0 <= pts[k] {
            fg += ga[gi].1;
            gi += 1;
        }
        while hi < ha.len() && ha[hi].0 <= pts[k] {
            fh += ha[hi].1;
            hi += 1;
        }
        if k + 1 < pts.len() {
            integral += (fg - fh) * (pts[k + 1] - pts[k]);
            lo = lo.min(integral);
            up = up.max(integral);
        }
    }
    let spreads_g = lo >= -tol;
    let spreads_h = up <= tol;
    let (relation, max_violation) = match (spreads_g, spreads_h) {
        (true, true) => (MpsRelation::Equal, lo.abs().max(up.abs())),
        (true, false) => (MpsRelation::MpsOf, (-lo).max(0.0)),
        (false, true) => (MpsRelation::MpsBy, up.max(0.0)),
        (false, false) => (MpsRelation::Incomparable, (-lo).min(up)),
    };
    MpsVerdict {
        relation,
        max_violation,
        dominance_gap: (-lo).max(up),
        mean_mismatch: false,
    }
}

/// A real-valued score that weakly increases along mean-preserving spreads.
pub trait Completion {
    fn score(&self, g: &PosteriorDistribution) -> f64;
}

impl<F: Fn(&PosteriorDistribution) -> f64> Completion for F {
    fn score(&self, g: &PosteriorDistribution) -> f64 {
        self(g)
    }
}

/// Variance of the posterior means.
#[derive(Debug, Clone, Copy, Default)]
pub struct Variance;

impl Completion for Variance {
    fn score(&self, g: &PosteriorDistribution) -> f64 {
        g.variance()
    }
}

/// Expected buyer surplus `E[∫_{lower}^{x} p(s) ds]`; convex in `x`
/// because `p` is increasing.
#[derive(Debug, Clone)]
pub struct BuyerSurplus {
    pub demand: DemandCurve,
    pub lower: f64,
}

impl BuyerSurplus {
    fn primitive(&self, x: f64) -> f64 {
        const N: usize = 128;
        let (a, b) = (self.lower, x);
        let h = (b - a) / N as f64;
        if h == 0.0 {
            return 0.0;
        }
        let f = |k: usize| self.demand.value(a + k as f64 * h);
        let inner: f64 = (1..N)
            .map(|k| if k % 2 == 1 { 4.0 * f(k) } else { 2.0 * f(k) })
            .sum();
        (f(0) + inner + f(N)) * h / 3.0
    }
}

impl Completion for BuyerSurplus {
    fn score(&self, g: &PosteriorDistribution) -> f64 {
        g.atoms().iter().map(|&(x, w)| w * self.primitive(x)).sum()
    }
}

/// The shipped completion: variance of posterior means.
pub fn completion_score(g: &PosteriorDistribution) -> f64 {
    Variance.score(g)
}
