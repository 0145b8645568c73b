use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Grid1D, JointModel};
use crate::error::{Error, Result};

/// Cost of acquiring a signal of precision θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `k * θ^q`
    Power { k: f64, q: f64 },
    /// Piecewise-linear interpolation through `(theta, cost)` knots; flat
    /// extrapolation outside the knots.
    Tabulated { theta: Vec<f64>, cost: Vec<f64> },
}

impl CostFunction {
    pub fn power(k: f64, q: f64) -> Self {
        CostFunction::Power { k, q }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self {
            CostFunction::Power { k, q } => k * theta.max(0.0).powf(*q),
            CostFunction::Tabulated { theta: t, cost: c } => {
                if theta <= t[0] {
                    return c[0];
                }
                let last = t.len() - 1;
                if theta >= t[last] {
                    return c[last];
                }
                let k = t.partition_point(|&s| s <= theta) - 1;
                let w = (theta - t[k]) / (t[k + 1] - t[k]);
                c[k] + w * (c[k + 1] - c[k])
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Power { k, q } => {
                if !(*k > 0.0 && *q >= 1.0) {
                    return Err(Error::Input(format!(
                        "power cost needs k > 0 and q >= 1, got k={k}, q={q}"
                    )));
                }
            }
            CostFunction::Tabulated { theta, cost } => {
                if theta.len() < 2 || theta.len() != cost.len() {
                    return Err(Error::Input(
                        "tabulated cost needs matching theta/cost of length >= 2".into(),
                    ));
                }
                if theta.windows(2).any(|w| w[1] <= w[0]) || cost.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Input(
                        "tabulated cost knots must be strictly increasing".into(),
                    ));
                }
                if cost[0] < 0.0 {
                    return Err(Error::Input("costs must be nonnegative".into()));
                }
            }
        }
        Ok(())
    }
}

type ModelFn = Arc<dyn Fn(f64) -> Result<JointModel> + Send + Sync>;
type SupportFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// A precision-indexed family of joint models with an acquisition cost.
#[derive(Clone)]
pub struct SignalFamily {
    domain: (f64, f64),
    model: ModelFn,
    support: SupportFn,
    cost: CostFunction,
}

impl fmt::Debug for SignalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignalFamily")
            .field("domain", &self.domain)
            .field("cost", &self.cost)
            .finish_non_exhaustive()
    }
}

impl SignalFamily {
    pub fn new(
        domain: (f64, f64),
        model: impl Fn(f64) -> Result<JointModel> + Send + Sync + 'static,
        support: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        cost: CostFunction,
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(Error::Input(format!("empty precision domain {domain:?}")));
        }
        cost.validate()?;
        Ok(Self {
            domain,
            model: Arc::new(model),
            support: Arc::new(support),
            cost,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn check(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo <= theta && theta <= hi) {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                lo,
                hi,
            });
        }
        Ok(())
    }

    pub fn model_at(&self, theta: f64) -> Result<JointModel> {
        self.check(theta)?;
        (self.model)(theta)
    }

    pub fn support_at(&self, theta: f64) -> Result<(f64, f64)> {
        self.check(theta)?;
        Ok((self.support)(theta))
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn cost_at(&self, theta: f64) -> f64 {
        self.cost.value(theta)
    }

    /// Same family with a different cost function.
    pub fn with_cost(&self, cost: CostFunction) -> Result<Self> {
        cost.validate()?;
        Ok(Self {
            cost,
            ..self.clone()
        })
    }
}

/// Signals that reveal the base value with probability θ and are pure noise
/// otherwise, so the posterior mean is `θ e + (1 - θ) E(e)`. Value and
/// profitability are independent.
pub fn replacement_family(base_x: Grid1D, y: Grid1D, cost: CostFunction) -> Result<SignalFamily> {
    let mu = base_x.mean();
    let (lo, hi) = base_x.bounds();
    let support = move |t: f64| (t * lo + (1.0 - t) * mu, t * hi + (1.0 - t) * mu);
    let model = move |t: f64| {
        let x = if t == 0.0 {
            Grid1D::point(mu)?
        } else {
            let pts = base_x
                .points()
                .iter()
                .map(|&e| t * e + (1.0 - t) * mu)
                .collect();
            Grid1D::with_bounds(pts, base_x.weights().to_vec(), support(t))?
        };
        JointModel::product(x, y.clone())
    };
    SignalFamily::new((0.0, 1.0), model, support, cost)
}

/// The replacement family built on U[0,1], so that the value marginal at
/// precision θ is U[(1-θ)/2, (1+θ)/2].
pub fn uniform_replacement_family(
    n_cells: usize,
    y: Grid1D,
    cost: CostFunction,
) -> Result<SignalFamily> {
    if n_cells < 2 {
        return Err(Error::Input(format!(
            "need at least 2 value cells, got {n_cells}"
        )));
    }
    replacement_family(Grid1D::uniform(0.0, 1.0, n_cells)?, y, cost)
}
