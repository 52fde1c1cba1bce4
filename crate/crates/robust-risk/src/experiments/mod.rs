//! The three numerical studies: robust CVaR of a Pareto toy claim, delta
//! hedging under Black–Scholes with transaction costs, and a risk-averse
//! newsvendor with heavy-tailed demand. Every pipeline is deterministic in
//! its configuration and seed.

mod hedging;
mod newsvendor;
mod toy;

pub use hedging::{bs_delta, bs_price, hedge_paths, hedge_portfolio, hedging_study, HedgingConfig, PathOutcome};
pub use newsvendor::{
    newsvendor_closed_form, newsvendor_robust_curve, profit, robust_cvar_of_order, NewsvendorConfig,
};
pub use toy::{divergence_comparison, toy_pareto_cvar, CompareConfig, ToyConfig, TOY_EXACT_CVAR};
