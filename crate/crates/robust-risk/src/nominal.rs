//! One-dimensional nominal distributions and the weighted sample sets used by
//! sample average approximations.
//!
//! Loss-oriented families (Weibull, generalized log-normal, Pareto, and the
//! `_neg` variants of log-normal and exponential) are defined on the positive
//! half-line and reflected onto `x ≤ 0` when `reflected` is set:
//!
//! ```text
//! weibull_neg(k, λ)    f(x) = k/λ (|x|/λ)^{k−1} exp(−(|x|/λ)^k)        x ≤ 0
//! gln_neg(μ, σ, p)     f(x) = exp(−|log|x| − μ|^p / (p σ^p)) / (C σ |x|)
//! pareto_neg(α, xm)    f(x) = α xm^α / |x|^{α+1}                       x ≤ −xm
//! ```
//!
//! Sampling is deterministic in `(seed, n)`: draws are produced in blocks of
//! [`BLOCK`] values, block `b` using a ChaCha20 stream keyed by `(seed, b)`,
//! so a smaller sample is a prefix of a larger one and blocks can be drawn in
//! parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::{gamma as gamma_fn, gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature::{integrate_line, QuadOptions};
use crate::spec_string::{fmt_param, CallSpec};

pub const BLOCK: usize = 4096;

/// Independent seed for the `key`-th sub-experiment of `seed` (SplitMix64
/// finaliser over the pair).
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random generator for substream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Gaussian { mu: f64, sigma: f64 },
    Weibull { k: f64, lambda: f64 },
    GenLogNormal { mu: f64, sigma: f64, p: f64 },
    Pareto { alpha: f64, xm: f64 },
    LogNormal { mu: f64, sigma: f64 },
    StudentT { nu: f64, mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    /// `x` with probability `p`, otherwise 0.
    Lottery { x: f64, p: f64 },
    /// Sorted support points with probabilities.
    Empirical { values: Vec<f64>, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NominalModel {
    family: Family,
    reflected: bool,
    /// Normalising constant of the generalized log-normal (1 otherwise).
    norm: f64,
}

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Param(msg.into()))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid standard normal")
}

impl NominalModel {
    pub fn new(family: Family, reflected: bool) -> Result<Self> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match &family {
            Family::Gaussian { mu, sigma } => check(mu.is_finite() && pos(*sigma), "gaussian requires sigma > 0")?,
            Family::Weibull { k, lambda } => check(pos(*k) && pos(*lambda), "weibull requires k, lambda > 0")?,
            Family::GenLogNormal { mu, sigma, p } => {
                check(mu.is_finite() && pos(*sigma) && *p >= 1.0 && p.is_finite(), "gln requires sigma > 0, p >= 1")?
            }
            Family::Pareto { alpha, xm } => check(pos(*alpha) && pos(*xm), "pareto requires alpha, xm > 0")?,
            Family::LogNormal { mu, sigma } => check(mu.is_finite() && pos(*sigma), "lognormal requires sigma > 0")?,
            Family::StudentT { nu, mu, sigma } => {
                check(pos(*nu) && mu.is_finite() && pos(*sigma), "student_t requires nu, sigma > 0")?
            }
            Family::Exponential { rate } => check(pos(*rate), "exponential requires rate > 0")?,
            Family::Lottery { x, p } => check(x.is_finite() && *p > 0.0 && *p < 1.0, "lottery requires 0 < p < 1")?,
            Family::Empirical { values, weights } => {
                check(!values.is_empty() && values.len() == weights.len(), "empirical requires matching non-empty arrays")?;
                check(values.iter().all(|v| v.is_finite()), "empirical values must be finite")?;
                check(weights.iter().all(|w| *w >= 0.0) && weights.iter().sum::<f64>() > 0.0, "empirical weights invalid")?;
            }
        }
        if reflected {
            check(
                matches!(
                    family,
                    Family::Weibull { .. }
                        | Family::GenLogNormal { .. }
                        | Family::Pareto { .. }
                        | Family::LogNormal { .. }
                        | Family::Exponential { .. }
                ),
                "reflection applies to positive-axis families only",
            )?;
        }
        let family = match family {
            Family::Empirical { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(weights.into_iter().map(|w| w / total)).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                Family::Empirical {
                    values: pairs.iter().map(|p| p.0).collect(),
                    weights: pairs.iter().map(|p| p.1).collect(),
                }
            }
            f => f,
        };
        let norm = match family {
            Family::GenLogNormal { p, .. } => {
                let g = move |z: f64| (-z.abs().powf(p) / p).exp();
                integrate_line(&g, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0, &QuadOptions::default())?.value()
            }
            _ => 1.0,
        };
        Ok(Self { family, reflected, norm })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mu, sigma }, false)
    }

    pub fn weibull_neg(k: f64, lambda: f64) -> Result<Self> {
        Self::new(Family::Weibull { k, lambda }, true)
    }

    pub fn gln_neg(mu: f64, sigma: f64, p: f64) -> Result<Self> {
        Self::new(Family::GenLogNormal { mu, sigma, p }, true)
    }

    pub fn pareto_neg(alpha: f64, xm: f64) -> Result<Self> {
        Self::new(Family::Pareto { alpha, xm }, true)
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::LogNormal { mu, sigma }, false)
    }

    pub fn student_t(nu: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::StudentT { nu, mu, sigma }, false)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate }, false)
    }

    pub fn lottery(x: f64, p: f64) -> Result<Self> {
        Self::new(Family::Lottery { x, p }, false)
    }

    pub fn empirical(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(Family::Empirical { values, weights }, false)
    }

    /// Parse a model identifier such as `pareto_neg(alpha=2,xm=1)`.
    pub fn parse(id: &str) -> Result<Self> {
        let c = CallSpec::parse(id)?;
        let (base, reflected) = match c.name.strip_suffix("_neg") {
            Some(b) => (b.to_string(), true),
            None => (c.name.clone(), false),
        };
        let family = match base.as_str() {
            "gaussian" | "normal" => {
                let v = c.resolve(&[("mu|mean", Some(0.0)), ("sigma|sd", Some(1.0))])?;
                Family::Gaussian { mu: v[0], sigma: v[1] }
            }
            "weibull" => {
                let v = c.resolve(&[("k|shape", None), ("lambda|scale", Some(1.0))])?;
                Family::Weibull { k: v[0], lambda: v[1] }
            }
            "gln" | "gen_lognormal" => {
                let v = c.resolve(&[("mu", Some(0.0)), ("sigma", None), ("p", Some(2.0))])?;
                Family::GenLogNormal { mu: v[0], sigma: v[1], p: v[2] }
            }
            "pareto" => {
                let v = c.resolve(&[("alpha", None), ("xm", Some(1.0))])?;
                Family::Pareto { alpha: v[0], xm: v[1] }
            }
            "lognormal" | "log_normal" => {
                let v = c.resolve(&[("mu", Some(0.0)), ("sigma", Some(1.0))])?;
                Family::LogNormal { mu: v[0], sigma: v[1] }
            }
            "student_t" | "t" => {
                let v = c.resolve(&[("nu|df", None), ("mu", Some(0.0)), ("sigma", Some(1.0))])?;
                Family::StudentT { nu: v[0], mu: v[1], sigma: v[2] }
            }
            "exponential" | "exp" => {
                let v = c.resolve(&[("rate|eta", Some(1.0))])?;
                Family::Exponential { rate: v[0] }
            }
            "lottery" => {
                let v = c.resolve(&[("x", None), ("p", None)])?;
                Family::Lottery { x: v[0], p: v[1] }
            }
            other => return Err(c.error(&format!("unknown model '{other}'"))),
        };
        Self::new(family, reflected)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// Family identifier used by the finiteness rule tables.
    pub fn family_id(&self) -> &'static str {
        match self.family {
            Family::Gaussian { .. } => "gaussian",
            Family::Weibull { .. } => "weibull",
            Family::GenLogNormal { .. } => "gen_lognormal",
            Family::Pareto { .. } => "pareto",
            Family::LogNormal { .. } => "lognormal",
            Family::StudentT { .. } => "student_t",
            Family::Exponential { .. } => "exponential",
            Family::Lottery { .. } => "lottery",
            Family::Empirical { .. } => "empirical",
        }
    }

    /// Canonical identifier, parseable by [`NominalModel::parse`] (except for
    /// empirical models).
    pub fn id(&self) -> String {
        let f = fmt_param;
        let (name, args) = match &self.family {
            Family::Gaussian { mu, sigma } => ("gaussian", format!("mu={},sigma={}", f(*mu), f(*sigma))),
            Family::Weibull { k, lambda } => ("weibull", format!("k={},lambda={}", f(*k), f(*lambda))),
            Family::GenLogNormal { mu, sigma, p } => ("gln", format!("mu={},sigma={},p={}", f(*mu), f(*sigma), f(*p))),
            Family::Pareto { alpha, xm } => ("pareto", format!("alpha={},xm={}", f(*alpha), f(*xm))),
            Family::LogNormal { mu, sigma } => ("lognormal", format!("mu={},sigma={}", f(*mu), f(*sigma))),
            Family::StudentT { nu, mu, sigma } => ("student_t", format!("nu={},mu={},sigma={}", f(*nu), f(*mu), f(*sigma))),
            Family::Exponential { rate } => ("exponential", format!("rate={}", f(*rate))),
            Family::Lottery { x, p } => ("lottery", format!("x={},p={}", f(*x), f(*p))),
            Family::Empirical { values, .. } => ("empirical", format!("n={}", values.len())),
        };
        format!("{name}{}({args})", if self.reflected { "_neg" } else { "" })
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.family, Family::Lottery { .. } | Family::Empirical { .. })
    }

    /// Atoms `(value, probability)` of a discrete model.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.family {
            Family::Lottery { x, p } => Some(vec![(*x, *p), (0.0, 1.0 - p)]),
            Family::Empirical { values, weights } => Some(values.iter().copied().zip(weights.iter().copied()).collect()),
            _ => None,
        }
    }

    fn base_support(&self) -> (f64, f64) {
        match &self.family {
            Family::Gaussian { .. } | Family::StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Pareto { xm, .. } => (*xm, f64::INFINITY),
            Family::Weibull { .. } | Family::GenLogNormal { .. } | Family::LogNormal { .. } | Family::Exponential { .. } => {
                (0.0, f64::INFINITY)
            }
            Family::Lottery { x, .. } => (x.min(0.0), x.max(0.0)),
            Family::Empirical { values, .. } => (values[0], values[values.len() - 1]),
        }
    }

    /// Closed support interval (extended-real endpoints).
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.base_support();
        if self.reflected {
            (-b, -a)
        } else {
            (a, b)
        }
    }

    fn base_log_density(&self, y: f64) -> f64 {
        let (lo, hi) = self.base_support();
        if y < lo || y > hi {
            return f64::NEG_INFINITY;
        }
        match &self.family {
            Family::Gaussian { mu, sigma } => {
                let z = (y - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Family::Weibull { k, lambda } => {
                if y == 0.0 {
                    return if *k < 1.0 {
                        f64::INFINITY
                    } else if *k == 1.0 {
                        -lambda.ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                let r = y / lambda;
                (k / lambda).ln() + (k - 1.0) * r.ln() - r.powf(*k)
            }
            Family::GenLogNormal { mu, sigma, p } => {
                if y == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (y.ln() - mu).abs() / sigma;
                -z.powf(*p) / p - (self.norm * sigma * y).ln()
            }
            Family::Pareto { alpha, xm } => alpha.ln() + alpha * xm.ln() - (alpha + 1.0) * y.ln(),
            Family::LogNormal { mu, sigma } => {
                if y == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (y.ln() - mu) / sigma;
                -0.5 * z * z - (sigma * y).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Family::StudentT { nu, mu, sigma } => {
                let z = (y - mu) / sigma;
                statrs::function::gamma::ln_gamma(0.5 * (nu + 1.0))
                    - statrs::function::gamma::ln_gamma(0.5 * nu)
                    - 0.5 * (nu * std::f64::consts::PI).ln()
                    - sigma.ln()
                    - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            Family::Exponential { rate } => rate.ln() - rate * y,
            Family::Lottery { .. } | Family::Empirical { .. } => f64::NAN,
        }
    }

    /// Log-density; `-inf` outside the support, NaN for discrete models.
    pub fn log_density(&self, x: f64) -> f64 {
        self.base_log_density(if self.reflected { -x } else { x })
    }

    /// Density; NaN for discrete models.
    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    fn gln_z_cdf(p: f64, z: f64) -> f64 {
        let x = z.abs().powf(p) / p;
        let g = if x.is_nan() || x <= 0.0 {
            0.0
        } else if x.is_infinite() {
            1.0
        } else {
            gamma_lr(1.0 / p, x)
        };
        if z >= 0.0 {
            0.5 + 0.5 * g
        } else {
            0.5 - 0.5 * g
        }
    }

    fn gln_z_sf(p: f64, z: f64) -> f64 {
        if z >= 0.0 {
            let x = z.powf(p) / p;
            if x <= 0.0 {
                0.5
            } else if x.is_finite() {
                0.5 * gamma_ur(1.0 / p, x)
            } else {
                0.0
            }
        } else {
            1.0 - Self::gln_z_sf(p, -z)
        }
    }

    fn base_cdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.base_support();
        if y < lo {
            return 0.0;
        }
        if y >= hi {
            return 1.0;
        }
        match &self.family {
            Family::Gaussian { mu, sigma } => std_normal().cdf((y - mu) / sigma),
            Family::Weibull { k, lambda } => -(-(y / lambda).powf(*k)).exp_m1(),
            Family::GenLogNormal { mu, sigma, p } => {
                if y <= 0.0 {
                    0.0
                } else {
                    Self::gln_z_cdf(*p, (y.ln() - mu) / sigma)
                }
            }
            Family::Pareto { alpha, xm } => 1.0 - (xm / y).powf(*alpha),
            Family::LogNormal { mu, sigma } => {
                if y <= 0.0 {
                    0.0
                } else {
                    std_normal().cdf((y.ln() - mu) / sigma)
                }
            }
            Family::StudentT { nu, mu, sigma } => StudentsT::new(*mu, *sigma, *nu).expect("validated").cdf(y),
            Family::Exponential { rate } => -(-rate * y).exp_m1(),
            Family::Lottery { .. } | Family::Empirical { .. } => {
                self.atoms().expect("discrete").iter().filter(|(v, _)| *v <= y).map(|(_, w)| w).sum()
            }
        }
    }

    fn base_sf(&self, y: f64) -> f64 {
        let (lo, hi) = self.base_support();
        if y < lo {
            return 1.0;
        }
        if y >= hi {
            return 0.0;
        }
        match &self.family {
            Family::Gaussian { mu, sigma } => std_normal().cdf(-(y - mu) / sigma),
            Family::Weibull { k, lambda } => (-(y / lambda).powf(*k)).exp(),
            Family::GenLogNormal { mu, sigma, p } => {
                if y <= 0.0 {
                    1.0
                } else {
                    Self::gln_z_sf(*p, (y.ln() - mu) / sigma)
                }
            }
            Family::Pareto { alpha, xm } => (xm / y).powf(*alpha),
            Family::LogNormal { mu, sigma } => {
                if y <= 0.0 {
                    1.0
                } else {
                    std_normal().cdf(-(y.ln() - mu) / sigma)
                }
            }
            Family::Exponential { rate } => (-rate * y).exp(),
            _ => 1.0 - self.base_cdf(y),
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.reflected {
            // P(X ≤ x) = P(Y ≥ −x); continuous families only.
            self.base_sf(-x)
        } else {
            self.base_cdf(x)
        }
    }

    fn bisect_quantile(&self, u: f64, cdf: impl Fn(f64) -> f64) -> f64 {
        let (lo0, hi0) = self.support();
        let mut lo = if lo0.is_finite() { lo0 } else { -1.0 };
        let mut hi = if hi0.is_finite() { hi0 } else { 1.0 };
        while lo0.is_infinite() && cdf(lo) > u {
            lo = 2.0 * lo - 1.0;
        }
        while hi0.is_infinite() && cdf(hi) < u {
            hi = 2.0 * hi + 1.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * mid.abs().max(1e-300) {
                break;
            }
            if cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Upper quantile of the positive base: `y` with `P(Y > y) = v`.
    fn base_isf(&self, v: f64) -> Option<f64> {
        Some(match &self.family {
            Family::Weibull { k, lambda } => lambda * (-v.ln()).powf(1.0 / k),
            Family::Pareto { alpha, xm } => xm * v.powf(-1.0 / alpha),
            Family::LogNormal { mu, sigma } => (mu - sigma * std_normal().inverse_cdf(v)).exp(),
            Family::Exponential { rate } => -v.ln() / rate,
            _ => return None,
        })
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        if self.reflected {
            if let Some(y) = self.base_isf(u) {
                return Ok(-y);
            }
            return Ok(self.bisect_quantile(u, |x| self.cdf(x)));
        }
        Ok(match &self.family {
            Family::Gaussian { mu, sigma } => mu + sigma * std_normal().inverse_cdf(u),
            Family::LogNormal { mu, sigma } => (mu + sigma * std_normal().inverse_cdf(u)).exp(),
            Family::Weibull { .. } | Family::Pareto { .. } | Family::Exponential { .. } => {
                self.base_isf(1.0 - u).expect("closed form")
            }
            Family::Lottery { .. } | Family::Empirical { .. } => {
                let mut acc = 0.0;
                let atoms = {
                    let mut a = self.atoms().expect("discrete");
                    a.sort_by(|x, y| x.0.total_cmp(&y.0));
                    a
                };
                for (v, w) in &atoms {
                    acc += w;
                    if acc >= u - 1e-15 {
                        return Ok(*v);
                    }
                }
                atoms[atoms.len() - 1].0
            }
            _ => self.bisect_quantile(u, |x| self.cdf(x)),
        })
    }

    /// Mean, when finite.
    pub fn mean(&self) -> Option<f64> {
        let m = match &self.family {
            Family::Gaussian { mu, .. } => *mu,
            Family::Weibull { k, lambda } => lambda * gamma_fn(1.0 + 1.0 / k),
            Family::GenLogNormal { .. } => {
                let f = |x: f64| x * self.base_log_density(x).exp();
                let v = integrate_line(&f, 0.0, f64::INFINITY, 1.0, 1.0, &QuadOptions::default()).ok()?;
                if !v.is_finite() {
                    return None;
                }
                v.value()
            }
            Family::Pareto { alpha, xm } => {
                if *alpha <= 1.0 {
                    return None;
                }
                alpha * xm / (alpha - 1.0)
            }
            Family::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Family::StudentT { nu, mu, .. } => {
                if *nu <= 1.0 {
                    return None;
                }
                *mu
            }
            Family::Exponential { rate } => 1.0 / rate,
            Family::Lottery { x, p } => x * p,
            Family::Empirical { values, weights } => values.iter().zip(weights).map(|(v, w)| v * w).sum(),
        };
        Some(if self.reflected { -m } else { m })
    }

    /// Anchor point and length scale for quadrature over the support.
    pub fn quad_anchor_scale(&self) -> (f64, f64) {
        let med = self.quantile(0.5).unwrap_or(0.0);
        let iqr = match (self.quantile(0.25), self.quantile(0.75)) {
            (Ok(a), Ok(b)) => b - a,
            _ => 1.0,
        };
        (med, if iqr > 0.0 && iqr.is_finite() { iqr } else { 1.0 })
    }

    fn draw_base(&self, rng: &mut ChaCha20Rng) -> f64 {
        let u: f64 = rng.random();
        match &self.family {
            Family::Gaussian { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            Family::Weibull { k, lambda } => lambda * (-(1.0 - u).ln()).powf(1.0 / k),
            Family::GenLogNormal { mu, sigma, p } => {
                let g: f64 = Gamma::new(1.0 / p, 1.0).expect("validated").sample(rng);
                let z = (p * g).powf(1.0 / p);
                let z = if u < 0.5 { -z } else { z };
                (mu + sigma * z).exp()
            }
            Family::Pareto { alpha, xm } => xm * (1.0 - u).powf(-1.0 / alpha),
            Family::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Family::StudentT { nu, mu, sigma } => {
                let t: f64 = StudentT::new(*nu).expect("validated").sample(rng);
                mu + sigma * t
            }
            Family::Exponential { rate } => -(1.0 - u).ln() / rate,
            Family::Lottery { x, p } => {
                if u < *p {
                    *x
                } else {
                    0.0
                }
            }
            Family::Empirical { values, weights } => {
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *v;
                    }
                }
                values[values.len() - 1]
            }
        }
    }

    /// One draw from this model.
    pub fn draw(&self, rng: &mut ChaCha20Rng) -> f64 {
        let y = self.draw_base(rng);
        if self.reflected {
            -y
        } else {
            y
        }
    }

    /// `n` i.i.d. draws, deterministic in `(seed, n)`.
    pub fn draw_values(&self, n: usize, seed: u64) -> Vec<f64> {
        let blocks = n.div_ceil(BLOCK);
        exec::map(blocks, |b| {
            let mut rng = rng_for(seed, b as u64);
            (b * BLOCK..n.min((b + 1) * BLOCK)).map(|_| self.draw(&mut rng)).collect::<Vec<f64>>()
        })
        .concat()
    }
}

/// `n` i.i.d. draws with uniform weights.
pub fn sample(model: &NominalModel, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Param("sample size must be at least 1".into()));
    }
    let mut s = SampleSet::uniform(model.draw_values(n, seed))?;
    s.seed = Some(seed);
    Ok(s)
}

/// `n` stratified draws: one inverse-CDF draw from each of the `n`
/// equiprobable strata, uniform weights.
pub fn stratified_sample(model: &NominalModel, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Param("sample size must be at least 1".into()));
    }
    let blocks = n.div_ceil(BLOCK);
    let values = exec::map(blocks, |b| {
        let mut rng = rng_for(seed, b as u64);
        (b * BLOCK..n.min((b + 1) * BLOCK))
            .map(|i| {
                let u: f64 = rng.random();
                // Keep the level strictly inside (0, 1).
                let level = ((i as f64 + u) / n as f64).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                model.quantile(level)
            })
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<Vec<f64>>>>()?
    .concat();
    let mut s = SampleSet::uniform(values)?;
    s.seed = Some(seed);
    Ok(s)
}

/// Draws from `proposal`, weighted by the normalised likelihood ratio `f/g`.
pub fn importance_sample(model: &NominalModel, proposal: &NominalModel, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Param("sample size must be at least 1".into()));
    }
    if !(model.is_continuous() && proposal.is_continuous()) {
        return Err(Error::Param("importance sampling requires continuous models".into()));
    }
    let (ml, mh) = model.support();
    let (pl, ph) = proposal.support();
    if ml < pl || mh > ph {
        return Err(Error::Support(format!("support of {} is not contained in that of {}", model.id(), proposal.id())));
    }
    let values = proposal.draw_values(n, seed);
    let mut logw = Vec::with_capacity(n);
    for &y in &values {
        let lg = proposal.log_density(y);
        if lg == f64::NEG_INFINITY || lg.is_nan() {
            return Err(Error::Support(format!("proposal density vanishes at drawn point {y}")));
        }
        logw.push(model.log_density(y) - lg);
    }
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Support("all likelihood ratios vanish".into()));
    }
    let weights: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let mut s = SampleSet::weighted(values, weights)?;
    s.seed = Some(seed);
    s.proposal = Some(proposal.id());
    Ok(s)
}

/// Samples `X_1..X_N` (payoffs) with probability weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
    /// Identifier of the importance-sampling proposal, if any.
    pub proposal: Option<String>,
}

impl SampleSet {
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::weighted(values, vec![1.0; n])
    }

    /// Weights are normalised to sum to one.
    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::Param("sample set needs matching non-empty values and weights".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("sample values must be finite".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Param("weights must be finite and non-negative".into()));
        }
        let total = exec::sum(weights.len(), |i| weights[i]);
        if !(total > 0.0) {
            return Err(Error::Param("weights sum to zero".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { values, weights, seed: None, proposal: None })
    }

    /// Exact two-atom set for the lottery `x` w.p. `p`, 0 otherwise.
    pub fn lottery(x: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Param(format!("lottery probability must lie in (0, 1), got {p}")));
        }
        Self::weighted(vec![x, 0.0], vec![p, 1.0 - p])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ w_i h(X_i)` with the deterministic reduction.
    pub fn expect(&self, h: impl Fn(f64) -> f64 + Sync) -> f64 {
        exec::sum(self.len(), |i| {
            let w = self.weights[i];
            if w == 0.0 {
                0.0
            } else {
                w * h(self.values[i])
            }
        })
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// Smallest value carrying positive weight.
    pub fn min(&self) -> f64 {
        self.values.iter().zip(&self.weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v).fold(f64::INFINITY, f64::min)
    }

    /// Largest value carrying positive weight.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same weights, values mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }
}
