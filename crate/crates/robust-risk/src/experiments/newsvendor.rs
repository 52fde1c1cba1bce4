use serde::Serialize;

use crate::divergences::{gl_cvar, Divergence};
use crate::dual::{solve, RobustProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::nominal::{sample, stratified_sample, NominalModel, SampleSet};
use crate::optim::minimize_convex_tol;
use crate::table::Table;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewsvendorConfig {
    /// Selling price.
    pub v: f64,
    /// Unit cost.
    pub c: f64,
    /// Salvage value.
    pub s: f64,
    /// Loss per unit of unmet demand.
    pub l: f64,
    pub demand: NominalModel,
    pub alpha: f64,
    /// Volatility parameter of the tailored divergence.
    pub sigma_div: f64,
    pub radius_grid: Vec<f64>,
    /// Upper end of the order search; the 0.9999 demand quantile when unset.
    pub y_max: Option<f64>,
    pub n_samples: usize,
    /// One demand draw per equiprobable stratum instead of i.i.d. draws.
    pub stratified: bool,
    pub seed: u64,
}

impl Default for NewsvendorConfig {
    fn default() -> Self {
        Self {
            v: 8.0,
            c: 4.0,
            s: 2.0,
            l: 4.0,
            demand: NominalModel::lognormal(0.0, 1.0).expect("valid log-normal"),
            alpha: 0.95,
            sigma_div: 1.0,
            radius_grid: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0],
            y_max: None,
            n_samples: 10_000,
            stratified: true,
            seed: 1,
        }
    }
}

impl NewsvendorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v > self.c && self.c > self.s) {
            return Err(Error::Param(format!("need v > c > s, got v={}, c={}, s={}", self.v, self.c, self.s)));
        }
        if !(self.l >= 0.0) {
            return Err(Error::Param(format!("l must be non-negative, got {}", self.l)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.sigma_div > 0.0) {
            return Err(Error::Param(format!("sigma_div must be positive, got {}", self.sigma_div)));
        }
        if self.radius_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Param("radii must be finite and non-negative".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Param("n_samples must be at least 1".into()));
        }
        if let Some(y) = self.y_max {
            if !(y > 0.0 && y.is_finite()) {
                return Err(Error::Param(format!("y_max must be positive, got {y}")));
            }
        }
        Ok(())
    }

    fn y_max(&self) -> Result<f64> {
        match self.y_max {
            Some(y) => Ok(y),
            None => self.demand.quantile(0.9999),
        }
    }
}

/// `π(y, d) = v min{d, y} + s (y − d)⁺ − l (d − y)⁺ − c y`.
pub fn profit(cfg: &NewsvendorConfig, y: f64, d: f64) -> f64 {
    cfg.v * d.min(y) + cfg.s * (y - d).max(0.0) - cfg.l * (d - y).max(0.0) - cfg.c * y
}

/// CVaR-optimal order without ambiguity.
pub fn newsvendor_closed_form(cfg: &NewsvendorConfig) -> Result<f64> {
    let e = cfg.c - cfg.s;
    let u = cfg.v + cfg.l - cfg.c;
    let v = cfg.v - cfg.c;
    if !(e + u > 0.0) {
        return Err(Error::Domain(format!("E + U must be positive, got {}", e + u)));
    }
    let q1 = u * (1.0 - cfg.alpha) / (e + u);
    let q2 = (e * cfg.alpha + u) / (e + u);
    for q in [q1, q2] {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile level {q} leaves (0, 1)")));
        }
    }
    Ok((e + v) / (e + u) * cfg.demand.quantile(q1)? + (u - v) / (e + u) * cfg.demand.quantile(q2)?)
}

/// Robust CVaR of the profit of ordering `y` under `problem`, on demand draws.
pub fn robust_cvar_of_order(problem: &RobustProblem, cfg: &NewsvendorConfig, demand: &SampleSet, y: f64) -> Result<f64> {
    let x = demand.map_values(|d| profit(cfg, y, d));
    Ok(solve(problem, &x, &SolverOptions::default())?.value)
}

/// Robust-optimal order per radius; columns `radius`, `y_star`, `value`.
pub fn newsvendor_robust_curve(cfg: &NewsvendorConfig) -> Result<Table> {
    cfg.validate()?;
    let demand = if cfg.stratified {
        stratified_sample(&cfg.demand, cfg.n_samples, cfg.seed)?
    } else {
        sample(&cfg.demand, cfg.n_samples, cfg.seed)?
    };
    let y_max = cfg.y_max()?;
    let phi1 = Divergence::cvar_indicator(cfg.alpha)?;
    let phi2 = gl_cvar(cfg.sigma_div, 2.0, 2.0)?;
    let mut t = Table::new(["radius", "y_star", "value"]);
    for &r in &cfg.radius_grid {
        let prob = RobustProblem::ball(phi1.clone(), phi2.clone(), r);
        // Errors surface as +inf and are re-raised after the search.
        let f = |y: f64| robust_cvar_of_order(&prob, cfg, &demand, y).unwrap_or(f64::INFINITY);
        let best = minimize_convex_tol(f, 0.0, y_max, 0, 1e-4 * y_max.max(1.0))
            .filter(|m| m.value.is_finite())
            .ok_or_else(|| Error::NonFinite(format!("robust CVaR is infinite for every order at radius {r}")))?;
        robust_cvar_of_order(&prob, cfg, &demand, best.x)?;
        t.push(vec![r.into(), best.x.into(), best.value.into()]);
    }
    Ok(t)
}
