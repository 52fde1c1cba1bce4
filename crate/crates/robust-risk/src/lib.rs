//! Distributionally robust risk measures parametrised by composite
//! φ-divergences.
//!
//! A risk measure is generated by a divergence `φ1` (CVaR, entropic, or any
//! optimized certainty equivalent), and model ambiguity around a nominal
//! distribution is expressed with a second divergence `φ2` (and optionally a
//! third, `φ3`, for the globalized formulation). Robust values are computed
//! through finite-dimensional duals minimised by the ellipsoid method.
//!
//! Conventions: samples are payoffs `X` (losses are negative), and risk values
//! are in loss units, so `ρ(c) = −c` for a constant payoff `c`.

pub mod divergences;
pub mod dual;
pub mod elicitation;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod finiteness;
pub mod nominal;
pub mod optim;
pub mod quadrature;
pub mod risk;
pub mod spec_string;
pub mod table;

pub use divergences::{Divergence, TailSpec, TailoredKind};
pub use dual::{DualSolution, Form, RobustProblem, SearchBox, SolverOptions};
pub use error::{Error, Result};
pub use nominal::{NominalModel, SampleSet};
pub use risk::RiskSpec;
