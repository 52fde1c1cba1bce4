use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::divergences::{gl_cvar, Divergence};
use crate::dual::{solve, RobustProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::exec;
use crate::nominal::{rng_for, SampleSet};
use crate::risk::empirical_cvar;
use crate::table::Table;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HedgingConfig {
    pub mu_s: f64,
    pub sigma_s: f64,
    pub r_f: f64,
    pub maturity: f64,
    pub s0: f64,
    pub strike: f64,
    /// Fixed cost per rebalance.
    pub k0: f64,
    /// Proportional cost per unit of traded value.
    pub k_prop: f64,
    pub n_grid: Vec<usize>,
    pub paths: usize,
    pub alpha: f64,
    pub radius: f64,
    pub seed: u64,
}

impl Default for HedgingConfig {
    fn default() -> Self {
        Self {
            mu_s: 0.05,
            sigma_s: 0.3,
            r_f: 0.01,
            maturity: 1.0,
            s0: 1.0,
            strike: 1.0,
            k0: 0.0002,
            k_prop: 0.005,
            n_grid: vec![10, 25, 50, 100, 200, 400, 800],
            paths: 8000,
            alpha: 0.95,
            radius: 0.1,
            seed: 1,
        }
    }
}

impl HedgingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("sigma_s", self.sigma_s), ("maturity", self.maturity), ("s0", self.s0), ("strike", self.strike)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.k0 >= 0.0 && self.k_prop >= 0.0) {
            return Err(Error::Param("transaction costs must be non-negative".into()));
        }
        if self.paths == 0 {
            return Err(Error::Param("paths must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Param("hedging frequencies must be non-empty and at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::Param(format!("radius must be non-negative, got {}", self.radius)));
        }
        Ok(())
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

fn check_bs_inputs(s: f64, k: f64, sigma: f64, tau: f64) -> Result<()> {
    if !(s > 0.0 && k > 0.0 && sigma > 0.0 && tau >= 0.0) {
        return Err(Error::Domain(format!("Black-Scholes inputs must be positive (S={s}, K={k}, sigma={sigma}, tau={tau})")));
    }
    Ok(())
}

fn d1(s: f64, k: f64, sigma: f64, r_f: f64, tau: f64) -> f64 {
    ((s / k).ln() + (r_f + 0.5 * sigma * sigma) * tau) / (sigma * tau.sqrt())
}

/// Call delta `Φ(d1)`; a step in `S − K` at zero time to maturity.
pub fn bs_delta(s: f64, k: f64, sigma: f64, r_f: f64, tau: f64) -> Result<f64> {
    check_bs_inputs(s, k, sigma, tau)?;
    if tau == 0.0 {
        return Ok(if s > k {
            1.0
        } else if s < k {
            0.0
        } else {
            0.5
        });
    }
    Ok(std_normal().cdf(d1(s, k, sigma, r_f, tau)))
}

/// Black–Scholes call price.
pub fn bs_price(s: f64, k: f64, sigma: f64, r_f: f64, tau: f64) -> Result<f64> {
    check_bs_inputs(s, k, sigma, tau)?;
    if tau == 0.0 {
        return Ok((s - k).max(0.0));
    }
    let a = d1(s, k, sigma, r_f, tau);
    let b = a - sigma * tau.sqrt();
    let n = std_normal();
    Ok(s * n.cdf(a) - k * (-r_f * tau).exp() * n.cdf(b))
}

/// Terminal state of one hedged path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    pub s_t: f64,
    pub stock: f64,
    pub cash: f64,
    /// `Σ δ_{t_{i−1}} (S_{t_i} − S_{t_{i−1}})`, the trading gains.
    pub gains: f64,
    /// `|C(S_T) − Stock(T) − Cash(T)|`.
    pub error: f64,
}

/// Delta hedge along the path driven by the standard normal increments `z`
/// (one per period, `n = z.len()`). The initial portfolio is the
/// Black–Scholes replicating one; at each interior date the position is
/// reset to the delta for the remaining maturity, paying `k0 + k·|Δδ|·S`.
pub fn hedge_portfolio(cfg: &HedgingConfig, z: &[f64]) -> Result<PathOutcome> {
    let n = z.len();
    if n == 0 {
        return Err(Error::Param("need at least one hedging period".into()));
    }
    let (sigma, r) = (cfg.sigma_s, cfg.r_f);
    let dt = cfg.maturity / n as f64;
    let drift = (cfg.mu_s - 0.5 * sigma * sigma) * dt;
    let vol = sigma * dt.sqrt();
    let growth = (r * dt).exp();
    let mut s = cfg.s0;
    let mut delta = bs_delta(s, cfg.strike, sigma, r, cfg.maturity)?;
    let mut cash = bs_price(s, cfg.strike, sigma, r, cfg.maturity)? - delta * s;
    let mut gains = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let next = s * (drift + vol * zi).exp();
        gains += delta * (next - s);
        s = next;
        cash *= growth;
        if i + 1 < n {
            let tau = cfg.maturity - (i + 1) as f64 * dt;
            let target = bs_delta(s, cfg.strike, sigma, r, tau)?;
            let trade = target - delta;
            cash -= trade * s + cfg.k0 + cfg.k_prop * trade.abs() * s;
            delta = target;
        }
    }
    let stock = delta * s;
    let payoff = (s - cfg.strike).max(0.0);
    Ok(PathOutcome { s_t: s, stock, cash, gains, error: (payoff - stock - cash).abs() })
}

/// Hedging errors (non-negative) of `cfg.paths` paths rebalanced `n` times.
/// Path `j` uses random substream `j` of `cfg.seed`.
pub fn hedge_paths(cfg: &HedgingConfig, n: usize) -> Result<SampleSet> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Param("hedging frequency must be at least 1".into()));
    }
    let errors = exec::map(cfg.paths, |j| {
        let mut rng = rng_for(cfg.seed, j as u64);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        hedge_portfolio(cfg, &z).map(|o| o.error)
    });
    let mut s = SampleSet::uniform(errors.into_iter().collect::<Result<Vec<f64>>>()?)?;
    s.seed = Some(cfg.seed);
    Ok(s)
}

/// Nominal and robust CVaR of the hedging error per frequency; columns `n`,
/// `nominal_cvar`, `robust_cvar`. Ambiguity is a ball of the tailored
/// divergence with volatility `σ_S`, `p = 2`, `d = 2`.
pub fn hedging_study(cfg: &HedgingConfig) -> Result<Table> {
    cfg.validate()?;
    let phi1 = Divergence::cvar_indicator(cfg.alpha)?;
    let phi2 = gl_cvar(cfg.sigma_s, 2.0, 2.0)?;
    let prob = RobustProblem::ball(phi1, phi2, cfg.radius);
    let mut t = Table::new(["n", "nominal_cvar", "robust_cvar"]);
    for &n in &cfg.n_grid {
        // Errors are losses; the risk measures act on payoffs.
        let x = hedge_paths(cfg, n)?.map_values(|e| -e);
        let nominal = empirical_cvar(cfg.alpha, &x)?;
        let robust = solve(&prob, &x, &SolverOptions::default())?.value;
        t.push(vec![n.into(), nominal.into(), robust.into()]);
    }
    Ok(t)
}
