//! Problem data, running costs and the Brownian resolvent.

pub mod assumptions;
pub mod cost;
pub mod game;
pub mod joint;
pub mod resolvent;

pub use assumptions::{
    validate_assumptions, validate_game_assumptions, Assumption, AssumptionReport, SamplingOptions,
};
pub use cost::{QuadraticCost, RunningCost, ScalarFn};
pub use game::{
    effective_volatility, GameSpec, InvestmentSpec, Payoff, ReducedProblem1D, SigmaConvention,
};
pub use joint::{
    interbank_running_cost, DifferenceCost, FnJointCost, InterbankCost, JointCost, SeparableCost,
};
pub use resolvent::{Resolvent, ResolventPoint, DEFAULT_QUADRATURE_TOL};
