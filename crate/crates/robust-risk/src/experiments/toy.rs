use serde::Serialize;

use crate::divergences::Divergence;
use crate::dual::{solve, RobustProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::nominal::{derive_seed, importance_sample, sample, NominalModel};
use crate::table::Table;

/// CVaR at 0.975 of the Pareto claim with density `2/|x|³` on `x ≤ −1`.
pub const TOY_EXACT_CVAR: f64 = 12.649;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyConfig {
    pub alpha: f64,
    pub n: usize,
    pub radii: Vec<f64>,
    pub phi2: Divergence,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.975,
            n: 1000,
            radii: vec![0.0, 0.001, 0.003, 0.005, 0.007, 0.01, 0.03, 0.1, 0.537, 1.0],
            phi2: Divergence::polynomial(3.0).expect("valid degree"),
            seed: 1,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n == 0 {
            return Err(Error::Param("sample size must be at least 1".into()));
        }
        if self.radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Param("radii must be finite and non-negative".into()));
        }
        Ok(())
    }
}

fn toy_model() -> NominalModel {
    NominalModel::pareto_neg(2.0, 1.0).expect("valid Pareto")
}

/// Robust CVaR of one Pareto draw for each radius; columns `radius`,
/// `robust_cvar`.
pub fn toy_pareto_cvar(cfg: &ToyConfig) -> Result<Table> {
    cfg.validate()?;
    let data = sample(&toy_model(), cfg.n, cfg.seed)?;
    let phi1 = Divergence::cvar_indicator(cfg.alpha)?;
    let mut t = Table::new(["radius", "robust_cvar"]);
    for &r in &cfg.radii {
        let prob = RobustProblem::ball(phi1.clone(), cfg.phi2.clone(), r);
        let v = solve(&prob, &data, &SolverOptions::default())?.value;
        t.push(vec![r.into(), v.into()]);
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareConfig {
    pub alpha: f64,
    pub radius: f64,
    pub sizes: Vec<usize>,
    pub use_importance: bool,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { alpha: 0.975, radius: 0.02, sizes: (1..=12).map(|k| 500 * k).collect(), use_importance: false, seed: 1 }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Param(format!("radius must be positive, got {}", self.radius)));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Param("sizes must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// Robust CVaR under the degree-3 polynomial divergence and under KL on the
/// same draw, per sample size; columns `sample_size`, `polynomial`, `kl`.
/// Each size gets an independent draw. With importance sampling the draws
/// come from the density `1/x²`.
pub fn divergence_comparison(cfg: &CompareConfig) -> Result<Table> {
    cfg.validate()?;
    let model = toy_model();
    let proposal = NominalModel::pareto_neg(1.0, 1.0)?;
    let phi1 = Divergence::cvar_indicator(cfg.alpha)?;
    let mut t = Table::new(["sample_size", "polynomial", "kl"]);
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let seed = derive_seed(cfg.seed, k as u64);
        let data = if cfg.use_importance {
            importance_sample(&model, &proposal, n, seed)?
        } else {
            sample(&model, n, seed)?
        };
        let mut row = vec![n.into()];
        for phi2 in [Divergence::polynomial(3.0)?, Divergence::kl()] {
            let prob = RobustProblem::ball(phi1.clone(), phi2, cfg.radius);
            row.push(solve(&prob, &data, &SolverOptions::default())?.value.into());
        }
        t.push(row);
    }
    Ok(t)
}
