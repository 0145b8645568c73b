//! Disclosure rules and what they induce: the non-disclosure posterior,
//! sale probabilities, the seller's payoff and the buyer's distribution of
//! posterior means.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Axis, Error, Result};
use crate::model::{DemandCurve, JointModel};

/// Non-disclosure mass at or below this is treated as zero (off-path).
pub const OFFPATH_MASS: f64 = 1e-14;

/// Posterior atoms closer than this are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

/// Per-cell disclosure probabilities, indexed `[[y_cell, x_cell]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRule {
    d: Array2<f64>,
}

impl TabularRule {
    pub fn new(d: Array2<f64>) -> Result<Self> {
        if let Some(v) = d.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!(
                "disclosure probability {v} outside [0, 1]"
            )));
        }
        Ok(Self { d })
    }

    pub fn full_disclosure(m: &JointModel) -> Self {
        Self {
            d: Array2::ones((m.ny(), m.nx())),
        }
    }

    pub fn no_disclosure(m: &JointModel) -> Self {
        Self {
            d: Array2::zeros((m.ny(), m.nx())),
        }
    }

    /// Builds a rule from `f(y_index, x_index)`.
    pub fn from_fn(m: &JointModel, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(Array2::from_shape_fn((m.ny(), m.nx()), |(j, i)| f(j, i)))
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.d[[j, i]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.d
    }

    pub fn into_array(self) -> Array2<f64> {
        self.d
    }

    /// `(ny, nx)`
    pub fn dim(&self) -> (usize, usize) {
        self.d.dim()
    }

    pub fn is_binary(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    fn assert_fits(&self, m: &JointModel) {
        assert_eq!(
            self.d.dim(),
            (m.ny(), m.nx()),
            "rule shape does not match the model grid"
        );
    }

    /// Writes the rule as a CSV matrix: a header `y\x, x_0, ...` and one row
    /// per y cell. Values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, m: &JointModel, out: W) -> Result<()> {
        self.assert_fits(m);
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Input(format!("csv write failed: {e}"));
        let mut header = vec!["y\\x".to_string()];
        header.extend(m.x().points().iter().map(|x| x.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for (j, y) in m.y().points().iter().enumerate() {
            let mut row = vec![y.to_string()];
            row.extend(self.d.row(j).iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::Input(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Reads a matrix written by [`TabularRule::write_csv`]. Returns the rule
    /// together with the x and y abscissae found in the file.
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, Vec<f64>, Vec<f64>)> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("not a number: {s:?}")))
        };
        let header = r
            .headers()
            .map_err(|e| Error::Input(format!("csv read failed: {e}")))?
            .clone();
        let xs = header
            .iter()
            .skip(1)
            .map(parse)
            .collect::<Result<Vec<_>>>()?;
        let mut ys = Vec::new();
        let mut vals = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Input(format!("csv read failed: {e}")))?;
            if rec.len() != xs.len() + 1 {
                return Err(Error::Input(format!(
                    "row {} has {} entries, expected {}",
                    ys.len() + 1,
                    rec.len(),
                    xs.len() + 1
                )));
            }
            ys.push(parse(&rec[0])?);
            for s in rec.iter().skip(1) {
                vals.push(parse(s)?);
            }
        }
        let d = Array2::from_shape_vec((ys.len(), xs.len()), vals)
            .map_err(|e| Error::Input(format!("bad rule matrix: {e}")))?;
        Ok((Self::new(d)?, xs, ys))
    }
}

/// The profitability threshold ȳ(·) of a threshold rule.
#[derive(Debug, Clone)]
pub enum YBar {
    Constant(f64),
    /// Built from the non-disclosure anchors `(x_nd, y_nd)` and the demand.
    Anchored {
        x_nd: f64,
        y_nd: f64,
        demand: DemandCurve,
    },
    /// Linear interpolation through `(x, ȳ)` samples, flat outside.
    Samples(Vec<(f64, f64)>),
}

/// Disclose iff `(x - x_bar) (y - ȳ(x)) >= 0`.
#[derive(Debug, Clone)]
pub struct ThresholdRule {
    pub x_bar: f64,
    pub y_bar: YBar,
}

/// Compact serialized form of a threshold rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub x_bar: f64,
    pub y_bar_samples: Vec<(f64, f64)>,
}

impl ThresholdRule {
    pub fn constant(x_bar: f64, y_bar: f64) -> Self {
        Self {
            x_bar,
            y_bar: YBar::Constant(y_bar),
        }
    }

    /// Unclamped threshold at `x`.
    pub fn y_bar_raw(&self, x: f64) -> f64 {
        match &self.y_bar {
            YBar::Constant(c) => *c,
            YBar::Anchored { x_nd, y_nd, demand } => anchored_y_bar(demand, *x_nd, *y_nd, x),
            YBar::Samples(s) => interpolate(s, x),
        }
    }

    /// Threshold at `x`, clamped to the profitability bounds of `m`.
    pub fn y_bar_at(&self, x: f64, m: &JointModel) -> f64 {
        let (lo, hi) = m.y().bounds();
        self.y_bar_raw(x).clamp(lo, hi)
    }

    pub fn discloses(&self, x: f64, y: f64, m: &JointModel) -> bool {
        (x - self.x_bar) * (y - self.y_bar_at(x, m)) >= 0.0
    }

    /// True when ȳ does not vary with x.
    pub fn is_constant(&self) -> bool {
        match &self.y_bar {
            YBar::Constant(_) => true,
            YBar::Anchored { demand, .. } => demand.affine_coefficients().is_some(),
            YBar::Samples(s) => s.windows(2).all(|w| w[0].1 == w[1].1),
        }
    }

    pub fn to_record(&self, m: &JointModel) -> ThresholdRecord {
        ThresholdRecord {
            x_bar: self.x_bar,
            y_bar_samples: m
                .x()
                .points()
                .iter()
                .map(|&x| (x, self.y_bar_at(x, m)))
                .collect(),
        }
    }

    pub fn from_record(r: ThresholdRecord) -> Result<Self> {
        if r.y_bar_samples.is_empty() || r.y_bar_samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input(
                "threshold samples must be nonempty with increasing x".into(),
            ));
        }
        Ok(Self {
            x_bar: r.x_bar,
            y_bar: YBar::Samples(r.y_bar_samples),
        })
    }
}

/// `p'(a) (a - x) / (p(a) - p(x))`, continuous through `x = a`.
pub(crate) fn steering_ratio(p: &DemandCurve, a: f64, x: f64) -> f64 {
    let dx = x - a;
    let d1 = p.derivative(a);
    if d1 == 0.0 {
        return 0.0;
    }
    if !d1.is_finite() {
        return f64::INFINITY;
    }
    let den = p.value(a) - p.value(x);
    if dx.abs() < 1e-6 * a.abs().max(1.0) || den == 0.0 {
        1.0 - 0.5 * p.second_derivative(a) / d1 * dx
    } else {
        d1 * (a - x) / den
    }
}

/// `y_nd` times the steering ratio, with a zero anchor pinning ȳ at zero
/// even where the ratio diverges.
pub(crate) fn anchored_y_bar(p: &DemandCurve, x_nd: f64, y_nd: f64, x: f64) -> f64 {
    if y_nd == 0.0 {
        0.0
    } else {
        y_nd * steering_ratio(p, x_nd, x)
    }
}

fn interpolate(s: &[(f64, f64)], x: f64) -> f64 {
    let k = s.partition_point(|&(sx, _)| sx <= x);
    if k == 0 {
        s[0].1
    } else if k == s.len() {
        s[k - 1].1
    } else {
        let ((x0, y0), (x1, y1)) = (s[k - 1], s[k]);
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Either representation of a disclosure rule.
#[derive(Debug, Clone)]
pub enum DisclosureRule {
    Threshold(ThresholdRule),
    Tabular(TabularRule),
}

impl DisclosureRule {
    pub fn to_tabular(&self, m: &JointModel) -> TabularRule {
        match self {
            DisclosureRule::Threshold(t) => rasterize(t, m),
            DisclosureRule::Tabular(d) => d.clone(),
        }
    }
}

/// Binary rasterization at cell midpoints; cells on the boundary disclose.
pub fn rasterize(t: &ThresholdRule, m: &JointModel) -> TabularRule {
    let (xs, ys) = (m.x().points(), m.y().points());
    let ybar: Vec<f64> = xs.iter().map(|&x| t.y_bar_at(x, m)).collect();
    let d = Array2::from_shape_fn((m.ny(), m.nx()), |(j, i)| {
        if (xs[i] - t.x_bar) * (ys[j] - ybar[i]) >= 0.0 {
            1.0
        } else {
            0.0
        }
    });
    TabularRule { d }
}

/// Rasterization by area: each cell discloses the fraction of its extent
/// that satisfies the threshold inequality, with ȳ frozen at the x midpoint.
/// The result moves continuously with `x_bar` and ȳ and agrees with
/// [`rasterize`] whenever the boundary falls on cell edges.
pub fn rasterize_smooth(t: &ThresholdRule, m: &JointModel) -> TabularRule {
    let (xs, ys) = (m.x().points(), m.y().points());
    let (ex, ey) = (m.x().edges(), m.y().edges());
    let mut d = Array2::zeros((m.ny(), m.nx()));
    for i in 0..m.nx() {
        let yb = t.y_bar_at(xs[i], m);
        let below = below_fraction(t.x_bar, xs[i], ex[i], ex[i + 1]);
        for j in 0..m.ny() {
            let (up, down) = y_fractions(yb, ys[j], ey[j], ey[j + 1]);
            d[[j, i]] = match below {
                None => 1.0,
                Some(w) => w * down + (1.0 - w) * up,
            };
        }
    }
    TabularRule { d }
}

/// Fraction of the x cell lying below `x_bar`; `None` when a zero-width cell
/// sits exactly on `x_bar` (every y discloses there).
pub(crate) fn below_fraction(x_bar: f64, x: f64, lo: f64, hi: f64) -> Option<f64> {
    if hi > lo {
        Some(((x_bar - lo) / (hi - lo)).clamp(0.0, 1.0))
    } else if x == x_bar {
        None
    } else if x < x_bar {
        Some(1.0)
    } else {
        Some(0.0)
    }
}

/// Fractions of the y cell at or above and at or below `y_bar`.
pub(crate) fn y_fractions(y_bar: f64, y: f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let up = ((hi - y_bar) / (hi - lo)).clamp(0.0, 1.0);
        (up, 1.0 - up)
    } else {
        ((y >= y_bar) as u8 as f64, (y <= y_bar) as u8 as f64)
    }
}

/// Buyer's expectations after seeing no disclosure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonDisclosurePosterior {
    pub x_nd: f64,
    pub y_nd: f64,
    pub nd_mass: f64,
}

impl NonDisclosurePosterior {
    pub fn is_offpath(&self) -> bool {
        self.nd_mass <= OFFPATH_MASS
    }
}

/// Mass-weighted averages over the concealed cells. Under (near) full
/// disclosure the event is off-path and `offpath_default` is returned for
/// `x_nd`, with `y_nd = E(y)` and zero mass.
///
/// # Panics
/// If the rule and model shapes differ.
pub fn nd_posterior(
    m: &JointModel,
    d: &TabularRule,
    offpath_default: f64,
) -> NonDisclosurePosterior {
    d.assert_fits(m);
    let (xs, ys) = (m.x().points(), m.y().points());
    let (mut w, mut wx, mut wy) = (0.0, 0.0, 0.0);
    for ((j, i), &mass) in m.mass().indexed_iter() {
        let c = mass * (1.0 - d.d[[j, i]]);
        w += c;
        wx += c * xs[i];
        wy += c * ys[j];
    }
    if w <= OFFPATH_MASS {
        return NonDisclosurePosterior {
            x_nd: offpath_default,
            y_nd: m.mean_y(),
            nd_mass: 0.0,
        };
    }
    let (xl, xh) = m.x().bounds();
    let (yl, yh) = m.y().bounds();
    NonDisclosurePosterior {
        x_nd: (wx / w).clamp(xl, xh),
        y_nd: (wy / w).clamp(yl, yh),
        nd_mass: w,
    }
}

/// Probability of sale conditional on the profitability cell `j`.
pub fn sale_prob_given_y(
    m: &JointModel,
    d: &TabularRule,
    p: &DemandCurve,
    nd: &NonDisclosurePosterior,
    j: usize,
) -> Result<f64> {
    d.assert_fits(m);
    let row = m.mass().row(j);
    let total: f64 = row.sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMassCell {
            axis: Axis::Profitability,
            index: j,
        });
    }
    let p_nd = p.value(nd.x_nd);
    let s: f64 = row
        .iter()
        .zip(m.x().points())
        .zip(d.d.row(j))
        .map(|((&w, &x), &dd)| w * (dd * p.value(x) + (1.0 - dd) * p_nd))
        .sum();
    Ok(s / total)
}

/// Seller payoff and its split into `E(y) E[P]` and `Cov(y, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoff {
    pub total: f64,
    pub mean_term: f64,
    pub cov_term: f64,
    /// Unconditional probability of sale E[P].
    pub sale_prob: f64,
}

/// Payoff `E[y P(y, d)]`, with the off-path default at `E(x)`.
pub fn seller_payoff(m: &JointModel, d: &TabularRule, p: &DemandCurve) -> Payoff {
    let nd = nd_posterior(m, d, m.mean_x());
    payoff_given(m, d, p, &nd)
}

pub(crate) fn payoff_given(
    m: &JointModel,
    d: &TabularRule,
    p: &DemandCurve,
    nd: &NonDisclosurePosterior,
) -> Payoff {
    let (ys, fy) = (m.y().points(), m.y().weights());
    let probs: Vec<f64> = (0..m.ny())
        .map(|j| sale_prob_given_y(m, d, p, nd, j).unwrap_or(0.0))
        .collect();
    let sale_prob: f64 = probs.iter().zip(fy).map(|(q, w)| q * w).sum();
    let total: f64 = (0..m.ny()).map(|j| fy[j] * ys[j] * probs[j]).sum();
    let ey = m.mean_y();
    let cov_term: f64 = (0..m.ny())
        .map(|j| fy[j] * (ys[j] - ey) * (probs[j] - sale_prob))
        .sum();
    Payoff {
        total,
        mean_term: ey * sale_prob,
        cov_term,
        sale_prob,
    }
}

/// A finite distribution over posterior-mean values, atoms sorted by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDistribution {
    atoms: Vec<(f64, f64)>,
}

impl PosteriorDistribution {
    /// Sorts, drops zero-mass atoms, merges atoms within [`ATOM_MERGE_TOL`]
    /// (at their mass-weighted mean) and normalizes.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms
            .iter()
            .any(|(x, w)| !x.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(Error::Input(
                "posterior atoms need finite values and nonnegative masses".into(),
            ));
        }
        atoms.retain(|a| a.1 > 0.0);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) {
            return Err(Error::Input("posterior distribution has no mass".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if x - last.0 < ATOM_MERGE_TOL => {
                    let m = last.1 + w;
                    last.0 = (last.0 * last.1 + x * w) / m;
                    last.1 = m;
                }
                _ => merged.push((x, w)),
            }
        }
        merged.iter_mut().for_each(|a| a.1 /= total);
        Ok(Self { atoms: merged })
    }

    pub fn point(x: f64) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
        }
    }

    pub fn from_grid(g: &crate::model::Grid1D) -> Self {
        Self::from_atoms(
            g.points()
                .iter()
                .copied()
                .zip(g.weights().iter().copied())
                .collect(),
        )
        .expect("grid weights are a valid distribution")
    }

    /// Mixture `sum_k w_k G_k`.
    pub fn mixture(parts: &[(f64, PosteriorDistribution)]) -> Result<Self> {
        let atoms = parts
            .iter()
            .flat_map(|(w, g)| g.atoms.iter().map(move |&(x, m)| (x, w * m)))
            .collect();
        Self::from_atoms(atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.atoms
            .iter()
            .map(|(x, w)| w * (x - mu) * (x - mu))
            .sum()
    }

    /// `P(X <= t)`
    /// Right-continuous cdf. Atoms within the merge tolerance of `t` count
    /// as sitting at `t`, so summation noise in pooled means is ignored.
    pub fn cdf(&self, t: f64) -> f64 {
        let t = t + ATOM_MERGE_TOL * t.abs().max(1.0);
        self.atoms
            .iter()
            .take_while(|a| a.0 <= t)
            .map(|a| a.1)
            .sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.atoms[0].0, self.atoms[self.atoms.len() - 1].0)
    }

    /// True when all mass lies within `tol` of a single value.
    pub fn is_point_mass(&self, tol: f64) -> bool {
        let (lo, hi) = self.support();
        hi - lo <= tol
    }
}

/// F^B: disclosed cells reveal their value, everything concealed pools at
/// `x_nd`.
pub fn buyer_posterior_distribution(m: &JointModel, d: &TabularRule) -> PosteriorDistribution {
    let nd = nd_posterior(m, d, m.mean_x());
    let mut atoms: Vec<(f64, f64)> = m
        .x()
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w: f64 = m
                .mass()
                .column(i)
                .iter()
                .zip(d.d.column(i))
                .map(|(a, b)| a * b)
                .sum();
            (x, w)
        })
        .collect();
    if nd.nd_mass > 0.0 {
        atoms.push((nd.x_nd, nd.nd_mass));
    }
    PosteriorDistribution::from_atoms(atoms).expect("a rule always induces a distribution")
}
