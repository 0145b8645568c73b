//! Disclosure design when the seller's profit motive is private.
//!
//! A seller knows the buyer's value `x` and their own per-unit profitability
//! `y`, and commits to a rule for disclosing `x`. The buyer never sees `y`.

pub mod acquisition;
pub mod disclosure;
pub mod equilibrium;
pub mod error;
pub mod informativeness;
pub mod model;
pub mod solver;
pub mod transparency;

pub use acquisition::{
    compare_across_tau, optimize_precision, precision_is_beneficial, sweep, value_of_precision,
    AcquisitionConfig, AcquisitionResult, SweepRow, TauComparison,
};
pub use disclosure::{
    buyer_posterior_distribution, nd_posterior, rasterize, seller_payoff, DisclosureRule,
    NonDisclosurePosterior, Payoff, PosteriorDistribution, TabularRule, ThresholdRecord,
    ThresholdRule, YBar,
};
pub use equilibrium::{
    commitment_coincidence, equilibrium_rule, solve_no_commitment, solve_no_commitment_transparent,
    EquilibriumResult, Regime,
};
pub use error::{Axis, Error, Result};
pub use informativeness::{completion_score, mps_compare, MpsRelation, MpsVerdict};
pub use model::{CostFunction, Curvature, DemandCurve, Grid1D, JointModel, SignalFamily};
pub use solver::{
    brute_force_oracle, foc_residual, solve_commitment, OracleFamily, SolveResult, SolverConfig,
};
pub use transparency::{compare_informativeness, solve_transparent, TransparentSolution};
