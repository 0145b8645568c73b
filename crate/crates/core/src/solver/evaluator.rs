use crate::disclosure::{anchored_y_bar, below_fraction, NonDisclosurePosterior, OFFPATH_MASS};
use crate::model::{DemandCurve, JointModel};

/// How ȳ is derived from the anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Shape {
    /// ȳ(x) = y_nd · p'(x_nd)(x_nd - x) / (p(x_nd) - p(x))
    Anchored,
    /// ȳ(x) = y_nd
    Constant,
}

/// Payoff and induced non-disclosure posterior of the area-rasterized
/// threshold rule built from an anchor pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Eval {
    pub payoff: f64,
    pub nd: NonDisclosurePosterior,
}

/// Evaluates anchor pairs in `O(nx log ny)` using per-column prefix sums.
/// Agrees with `seller_payoff(rasterize_smooth(..))` up to rounding.
pub(crate) struct AnchorEvaluator<'a> {
    m: &'a JointModel,
    p: &'a DemandCurve,
    shape: Shape,
    px: Vec<f64>,
    ex: Vec<f64>,
    ey: Vec<f64>,
    col_total: Vec<f64>,
    col_ytotal: Vec<f64>,
}

impl<'a> AnchorEvaluator<'a> {
    pub fn new(m: &'a JointModel, p: &'a DemandCurve, shape: Shape) -> Self {
        let ny = m.ny();
        let shape = if p.affine_coefficients().is_some() {
            Shape::Constant
        } else {
            shape
        };
        Self {
            m,
            p,
            shape,
            px: m.x().points().iter().map(|&x| p.value(x)).collect(),
            ex: m.x().edges(),
            ey: m.y().edges(),
            col_total: (0..m.nx()).map(|i| m.col_mass_below(i, ny)).collect(),
            col_ytotal: (0..m.nx()).map(|i| m.col_ymass_below(i, ny)).collect(),
        }
    }

    pub fn model(&self) -> &JointModel {
        self.m
    }

    pub fn y_bar(&self, a: (f64, f64), x: f64) -> f64 {
        let (lo, hi) = self.m.y().bounds();
        let raw = match self.shape {
            Shape::Constant => a.1,
            Shape::Anchored => anchored_y_bar(self.p, a.0, a.1, x),
        };
        raw.clamp(lo, hi)
    }

    /// Mass and y-weighted mass at or above / at or below `yb` in column `i`,
    /// counting boundary cells by area.
    fn split(&self, i: usize, yb: f64) -> ((f64, f64), (f64, f64)) {
        let m = self.m;
        let ny = m.ny();
        let ys = m.y().points();
        if self.ey[ny] <= self.ey[0] {
            // Single zero-width profitability cell.
            let (w, wy) = (self.col_total[i], self.col_ytotal[i]);
            let up = if ys[0] >= yb { (w, wy) } else { (0.0, 0.0) };
            let down = if ys[0] <= yb { (w, wy) } else { (0.0, 0.0) };
            return (up, down);
        }
        let k = self.ey.partition_point(|&e| e < yb);
        if k == 0 {
            return ((self.col_total[i], self.col_ytotal[i]), (0.0, 0.0));
        }
        if k > ny {
            return ((0.0, 0.0), (self.col_total[i], self.col_ytotal[i]));
        }
        let c = k - 1;
        let frac = ((self.ey[k] - yb) / (self.ey[k] - self.ey[c])).clamp(0.0, 1.0);
        let cell = m.col_mass_below(i, k) - m.col_mass_below(i, c);
        let cell_y = cell * ys[c];
        let up = (
            self.col_total[i] - m.col_mass_below(i, k) + frac * cell,
            self.col_ytotal[i] - m.col_ymass_below(i, k) + frac * cell_y,
        );
        let down = (
            m.col_mass_below(i, c) + (1.0 - frac) * cell,
            m.col_ymass_below(i, c) + (1.0 - frac) * cell_y,
        );
        (up, down)
    }

    pub fn eval(&self, a: (f64, f64)) -> Eval {
        let m = self.m;
        let xs = m.x().points();
        let (mut dy_pay, mut dy_total) = (0.0, 0.0);
        let (mut nd, mut nd_x, mut nd_y) = (0.0, 0.0, 0.0);
        for i in 0..m.nx() {
            let yb = self.y_bar(a, xs[i]);
            let (up, down) = self.split(i, yb);
            // Disclosed (mass, y-mass) and concealed (mass, y-mass) in this column.
            let (disc, conc) = match below_fraction(a.0, xs[i], self.ex[i], self.ex[i + 1]) {
                None => ((self.col_total[i], self.col_ytotal[i]), (0.0, 0.0)),
                Some(w) => (
                    (w * down.0 + (1.0 - w) * up.0, w * down.1 + (1.0 - w) * up.1),
                    (w * up.0 + (1.0 - w) * down.0, w * up.1 + (1.0 - w) * down.1),
                ),
            };
            // Cells exactly on ȳ count on both sides in `split`; remove the overlap.
            let overlap_m = up.0 + down.0 - self.col_total[i];
            let overlap_y = up.1 + down.1 - self.col_ytotal[i];
            let conc = (conc.0 - overlap_m, conc.1 - overlap_y);
            dy_pay += self.px[i] * disc.1;
            dy_total += disc.1;
            nd += conc.0;
            nd_x += conc.0 * xs[i];
            nd_y += conc.1;
        }
        let nd = if nd <= OFFPATH_MASS {
            NonDisclosurePosterior {
                x_nd: m.mean_x(),
                y_nd: m.mean_y(),
                nd_mass: 0.0,
            }
        } else {
            let (xl, xh) = m.x().bounds();
            let (yl, yh) = m.y().bounds();
            NonDisclosurePosterior {
                x_nd: (nd_x / nd).clamp(xl, xh),
                y_nd: (nd_y / nd).clamp(yl, yh),
                nd_mass: nd,
            }
        };
        let concealed_y = m.mean_y() - dy_total;
        let payoff = dy_pay
            + if nd.nd_mass > 0.0 {
                self.p.value(nd.x_nd) * concealed_y
            } else {
                0.0
            };
        Eval { payoff, nd }
    }
}
