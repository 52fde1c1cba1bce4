//! Nominal (non-robust) risk measures: optimized certainty equivalents,
//! shortfall risk and expected utility, on samples or by quadrature.
//!
//! With `u(x) = −φ1*(−x)` the OCE of a payoff `X` is
//! `inf_η η − E[u(X + η)] = inf_η η + E[φ1*(−X − η)]`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::divergences::Divergence;
use crate::error::{Error, Result};
use crate::nominal::{NominalModel, SampleSet};
use crate::optim::{bisect_threshold, minimize_convex};
use crate::quadrature::{integrate_line, Integral, QuadOptions};
use crate::spec_string::{fmt_param, CallSpec};

const MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RiskKind {
    Cvar { alpha: f64 },
    Entropic { gamma: f64 },
    Oce,
}

/// A risk measure in OCE form, carried by its generating divergence `φ1`.
#[derive(Clone, Debug)]
pub struct RiskSpec {
    kind: RiskKind,
    phi1: Divergence,
}

impl Serialize for RiskSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl fmt::Display for RiskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl RiskSpec {
    pub fn cvar(alpha: f64) -> Result<Self> {
        Ok(Self { kind: RiskKind::Cvar { alpha }, phi1: Divergence::cvar_indicator(alpha)? })
    }

    /// Entropic risk `log E[e^{−γX}] / γ`.
    pub fn entropic(gamma: f64) -> Result<Self> {
        Ok(Self { kind: RiskKind::Entropic { gamma }, phi1: Divergence::kl_scaled(gamma)? })
    }

    pub fn oce(phi1: Divergence) -> Self {
        Self { kind: RiskKind::Oce, phi1 }
    }

    /// Parse `cvar(0.975)`, `entropic(1.0)` or `oce(phi1=<divergence id>)`.
    pub fn parse(id: &str) -> Result<Self> {
        let t = id.trim();
        let lower = t.to_ascii_lowercase();
        if lower.starts_with("oce(") && lower.ends_with(')') {
            let inner = t[4..t.len() - 1].trim();
            let inner = match inner.split_once('=') {
                Some((k, v)) if k.trim().eq_ignore_ascii_case("phi1") => v.trim(),
                _ => inner,
            };
            return Ok(Self::oce(Divergence::parse(inner)?));
        }
        let c = CallSpec::parse(t)?;
        match c.name.as_str() {
            "cvar" => Self::cvar(c.resolve(&[("alpha", None)])?[0]),
            "entropic" => Self::entropic(c.resolve(&[("gamma", Some(1.0))])?[0]),
            other => Err(c.error(&format!("unknown risk measure '{other}'"))),
        }
    }

    pub fn id(&self) -> String {
        match self.kind {
            RiskKind::Cvar { alpha } => format!("cvar({})", fmt_param(alpha)),
            RiskKind::Entropic { gamma } => format!("entropic({})", fmt_param(gamma)),
            RiskKind::Oce => format!("oce(phi1={})", self.phi1.id()),
        }
    }

    pub fn kind(&self) -> RiskKind {
        self.kind
    }

    pub fn phi1(&self) -> &Divergence {
        &self.phi1
    }

    /// `u(x) = −φ1*(−x)`.
    pub fn utility(&self, x: f64) -> f64 {
        self.phi1.utility(x)
    }
}

fn eta_bracket(data: &SampleSet) -> (f64, f64) {
    (-data.max() - 1.0, -data.min() + 1.0)
}

/// `η + E[φ1*(−X − η)]`.
pub fn oce_objective(phi1: &Divergence, data: &SampleSet, eta: f64) -> f64 {
    eta + data.expect(|x| phi1.conjugate(-x - eta))
}

/// OCE of the (weighted) sample distribution.
pub fn nominal_oce(spec: &RiskSpec, data: &SampleSet) -> Result<f64> {
    if let RiskKind::Cvar { alpha } = spec.kind {
        // Closed form agrees with the η-minimisation; kept as the fast path.
        return empirical_cvar(alpha, data);
    }
    oce_by_minimization(spec.phi1(), data)
}

/// OCE by golden-section over `η`, valid for every `φ1`.
pub fn oce_by_minimization(phi1: &Divergence, data: &SampleSet) -> Result<f64> {
    oce_minimizer(phi1, data).map(|(_, v)| v)
}

/// Optimal `η` and the OCE value.
pub fn oce_minimizer(phi1: &Divergence, data: &SampleSet) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let (lo, hi) = eta_bracket(data);
    minimize_convex(|eta| oce_objective(phi1, data, eta), lo, hi, MAX_DOUBLINGS)
        .filter(|m| m.value.is_finite())
        .map(|m| (m.x, m.value))
        .ok_or_else(|| Error::NonFinite(format!("OCE objective with {} is +inf on the whole bracket", phi1.id())))
}

/// Empirical CVaR with the fractional-atom convention: the mean of the worst
/// `1 − α` probability mass of losses `−X`.
pub fn empirical_cvar(alpha: f64, data: &SampleSet) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Param(format!("CVaR level must lie in (0, 1), got {alpha}")));
    }
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| data.values[a].total_cmp(&data.values[b]));
    let tail = 1.0 - alpha;
    let mut remaining = tail;
    let mut acc = 0.0;
    for i in idx {
        if remaining <= 0.0 {
            break;
        }
        let take = data.weights[i].min(remaining);
        acc += take * (-data.values[i]);
        remaining -= take;
    }
    Ok(acc / tail)
}

/// OCE of a nominal model, with the expectation computed by quadrature.
pub fn exact_oce(spec: &RiskSpec, model: &NominalModel) -> Result<f64> {
    let phi1 = spec.phi1();
    if let Some(atoms) = model.atoms() {
        let (v, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        return oce_by_minimization(phi1, &SampleSet::weighted(v, w)?);
    }
    let (lo, hi) = model.support();
    let (_, scale) = model.quad_anchor_scale();
    let opts = QuadOptions::default();
    let objective = |eta: f64| -> f64 {
        let integrand = |x: f64| {
            let d = model.density(x);
            if d > 0.0 {
                d * phi1.conjugate(-x - eta)
            } else {
                0.0
            }
        };
        // The kink of CVaR sits at x = −η, so rays leave from there.
        match integrate_line(&integrand, lo, hi, -eta, scale, &opts) {
            Ok(Integral::Finite(v)) => eta + v,
            _ => f64::INFINITY,
        }
    };
    let (a, b) = (model.quantile(0.01)?, model.quantile(0.99)?);
    minimize_convex(objective, -b - 1.0, -a + 1.0, MAX_DOUBLINGS)
        .map(|m| m.value)
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonFinite(format!("OCE of {} under {} is infinite", spec.id(), model.id())))
}

/// Shortfall risk: the smallest `η` with `E[u(X + η)] ≥ 0`.
pub fn nominal_shortfall(spec: &RiskSpec, data: &SampleSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let phi1 = spec.phi1();
    let (lo, hi) = eta_bracket(data);
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    bisect_threshold(|eta| data.expect(|x| phi1.conjugate(-x - eta)) <= 0.0, lo, hi, tol, 400, MAX_DOUBLINGS)
        .ok_or_else(|| Error::Infeasible(format!("no capital makes {} acceptable", spec.id())))
}

/// Robust expected utility with a `φ2` penalty:
/// `inf_θ −θ + E[φ2*(φ1*(−X) + θ)]`.
pub fn robust_eu_penalty(phi1: &Divergence, phi2: &Divergence, data: &SampleSet) -> Result<f64> {
    robust_eu_penalty_point(phi1, phi2, data).map(|(_, v)| v)
}

/// Optimal `θ` and value of [`robust_eu_penalty`].
pub fn robust_eu_penalty_point(phi1: &Divergence, phi2: &Divergence, data: &SampleSet) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let a: Vec<f64> = data.values.iter().map(|&x| phi1.conjugate(-x)).collect();
    if a.iter().zip(&data.weights).any(|(v, w)| *w > 0.0 && v.is_infinite()) {
        return Err(Error::NonFinite(format!("{} conjugate is infinite on the sample", phi1.id())));
    }
    let (amin, amax) = a
        .iter()
        .zip(&data.weights)
        .filter(|(_, w)| **w > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
    let objective = |theta: f64| -theta + crate::exec::sum(a.len(), |i| data.weights[i] * phi2.conjugate(a[i] + theta));
    minimize_convex(objective, -amax - 1.0, -amin + 1.0, MAX_DOUBLINGS)
        .filter(|m| m.value.is_finite())
        .map(|m| (m.x, m.value))
        .ok_or_else(|| Error::NonFinite("robust expected-utility objective is +inf everywhere".into()))
}
