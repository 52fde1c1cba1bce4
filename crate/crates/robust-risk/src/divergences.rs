//! φ-divergences as evaluable triples `(φ, φ*, (φ*)')`.
//!
//! Every divergence satisfies `φ` convex, `φ ≥ 0`, `φ(1) = 0` and
//! `dom φ ⊂ [0, ∞)`. The conjugate `φ*(s) = sup_t { s t − φ(t) }` is the
//! object used by all dual reformulations, so it is always available in
//! closed form; `φ` itself is closed form for the catalog and obtained by
//! numerical biconjugation for divergences built from a conjugate tail.
//!
//! Catalog (conjugates):
//!
//! ```text
//! kl(γ)              (e^{γs} − 1)/γ
//! chi2               2 − 2√(1 − s)                  s ≤ 1
//! modified-chi2      s + s²/4 (s ≥ −2), −1 otherwise
//! burg               −log(1 − s)                    s < 1
//! tv                 max(s, −1)                     s ≤ 1
//! polynomial(p)      max(1 + (p−1)s, 0)^{p/(p−1)}/p − 1/p
//! cvar-indicator(α)  max(s, 0)/(1 − α)
//! degenerate         s
//! ```
//!
//! Tail construction: given an increasing convex `ψ` on `[0, ∞)`,
//!
//! ```text
//! ψ̃(s) = (ψ(s) + (ψ''(0) − ψ'(0)) s − ψ(0)) / ψ''(0)     s ≥ 0
//! φ*(s) = e^s − 1                                        s ≤ 0
//! ```
//!
//! which is C² at the origin with `φ*(0) = 0`, `(φ*)'(0) = 1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_line, Integral, QuadOptions};
use crate::spec_string::{fmt_param, CallSpec};

/// Conjugate values above this threshold are reported as `+inf`.
pub const OVERFLOW: f64 = 1e300;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Prescribed conjugate tail for [`construct_from_tail`].
#[derive(Clone)]
pub struct TailSpec {
    pub psi: ScalarFn,
    /// Analytic `ψ'`; a central difference is used when absent.
    pub psi_deriv: Option<ScalarFn>,
    /// `(log ψ, log ψ')`, evaluated without overflow; lets `φ(t)/t` be
    /// resolved for ratios `t` beyond the floating-point range.
    pub log_psi: Option<(ScalarFn, ScalarFn)>,
    pub psi_d1_at0: f64,
    pub psi_d2_at0: f64,
    pub psi_value_at0: f64,
}

impl TailSpec {
    fn dpsi(&self, s: f64) -> f64 {
        match &self.psi_deriv {
            Some(d) => d(s),
            None => {
                let h = 1e-6 * s.abs().max(1.0);
                let lo = (s - h).max(0.0);
                ((self.psi)(s + h) - (self.psi)(lo)) / (s + h - lo)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailoredKind {
    GlCvar,
    WeibullPower,
    EntropicWeibull,
}

#[derive(Clone)]
enum Kind {
    Kl { gamma: f64 },
    Chi2,
    ModifiedChi2,
    Burg,
    TotalVariation,
    Polynomial { p: f64 },
    CvarIndicator { alpha: f64 },
    Degenerate,
    Tail(Arc<Tail>),
}

struct Tail {
    spec: TailSpec,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl Tail {
    fn conj(&self, s: f64) -> f64 {
        if s <= 0.0 {
            s.exp_m1()
        } else {
            self.c1 * (self.spec.psi)(s) + self.c2 * s + self.c3
        }
    }

    fn conj_deriv(&self, s: f64) -> f64 {
        if s < 0.0 {
            s.exp()
        } else {
            self.c1 * self.spec.dpsi(s) + self.c2
        }
    }
}

/// A φ-divergence in the class Φ0.
#[derive(Clone)]
pub struct Divergence {
    name: String,
    params: Vec<(String, f64)>,
    kind: Kind,
    /// Smallest `s` at which the conjugate overflows or leaves its domain.
    conj_limit: f64,
}

impl fmt::Debug for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Divergence({})", self.id())
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Divergences are identified by their catalog id.
impl PartialEq for Divergence {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl serde::Serialize for Divergence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl Divergence {
    fn new(name: &str, params: Vec<(String, f64)>, kind: Kind) -> Self {
        let mut d = Self { name: name.to_string(), params, kind, conj_limit: f64::INFINITY };
        d.conj_limit = d.find_conj_limit();
        d
    }

    pub fn kl() -> Self {
        Self::kl_scaled(1.0).expect("unit scale is valid")
    }

    /// `φ(t) = (t log t − t + 1)/γ`, the divergence behind the entropic risk.
    pub fn kl_scaled(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Param(format!("kl requires gamma > 0, got {gamma}")));
        }
        let params = if gamma == 1.0 { vec![] } else { vec![("gamma".into(), gamma)] };
        Ok(Self::new("kl", params, Kind::Kl { gamma }))
    }

    pub fn chi2() -> Self {
        Self::new("chi2", vec![], Kind::Chi2)
    }

    pub fn modified_chi2() -> Self {
        Self::new("modified-chi2", vec![], Kind::ModifiedChi2)
    }

    pub fn burg() -> Self {
        Self::new("burg", vec![], Kind::Burg)
    }

    pub fn total_variation() -> Self {
        Self::new("tv", vec![], Kind::TotalVariation)
    }

    /// `φ(t) = (t^p − p(t − 1) − 1)/(p(p − 1))` for `p > 0`, `p ≠ 1`.
    pub fn polynomial(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) || (p - 1.0).abs() < 1e-12 {
            return Err(Error::Param(format!("polynomial requires p > 0 and p != 1, got {p}")));
        }
        Ok(Self::new("polynomial", vec![("p".into(), p)], Kind::Polynomial { p }))
    }

    /// Indicator of `[0, 1/(1−α)]`; as `φ1` it generates CVaR_α.
    pub fn cvar_indicator(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Param(format!("cvar-indicator requires 0 < alpha < 1, got {alpha}")));
        }
        Ok(Self::new("cvar-indicator", vec![("alpha".into(), alpha)], Kind::CvarIndicator { alpha }))
    }

    /// Indicator of `{1}`: no ambiguity, `φ*(s) = s`.
    pub fn degenerate() -> Self {
        Self::new("degenerate", vec![], Kind::Degenerate)
    }

    /// Parse a catalog identifier.
    pub fn parse(id: &str) -> Result<Self> {
        let c = CallSpec::parse(id)?;
        match c.name.as_str() {
            "kl" | "kullback_leibler" => Self::kl_scaled(c.resolve(&[("gamma", Some(1.0))])?[0]),
            "chi2" => {
                c.resolve(&[])?;
                Ok(Self::chi2())
            }
            "modified_chi2" => {
                c.resolve(&[])?;
                Ok(Self::modified_chi2())
            }
            "burg" => {
                c.resolve(&[])?;
                Ok(Self::burg())
            }
            "tv" | "total_variation" => {
                c.resolve(&[])?;
                Ok(Self::total_variation())
            }
            "degenerate" | "none" => {
                c.resolve(&[])?;
                Ok(Self::degenerate())
            }
            "polynomial" | "poly" => Self::polynomial(c.resolve(&[("p", None)])?[0]),
            "cvar_indicator" | "cvar" => Self::cvar_indicator(c.resolve(&[("alpha", None)])?[0]),
            "gl_cvar" => {
                let v = c.resolve(&[("sigma", None), ("p", None), ("d", None)])?;
                gl_cvar(v[0], v[1], v[2])
            }
            "weibull_power" => {
                let v = c.resolve(&[("k", None), ("d", None)])?;
                weibull_power(v[0], v[1])
            }
            "entropic_weibull" => {
                let v = c.resolve(&[("gamma", None), ("lambda", None), ("k", None)])?;
                entropic_weibull(v[0], v[1], v[2])
            }
            other => Err(c.error(&format!("unknown divergence '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Canonical identifier, parseable by [`Divergence::parse`] for catalog
    /// and tailored entries.
    pub fn id(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            let args: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={}", fmt_param(*v))).collect();
            format!("{}({})", self.name, args.join(","))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, Kind::Degenerate)
    }

    pub fn is_constructed(&self) -> bool {
        matches!(self.kind, Kind::Tail(_))
    }

    /// Supremum of `dom φ`.
    pub fn dom_upper(&self) -> f64 {
        match self.kind {
            Kind::CvarIndicator { alpha } => 1.0 / (1.0 - alpha),
            Kind::Degenerate => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Supremum of `{s : φ*(s) < ∞}`; also the recession slope `lim φ(t)/t`.
    pub fn conj_dom_upper(&self) -> f64 {
        match self.kind {
            Kind::Chi2 | Kind::Burg | Kind::TotalVariation => 1.0,
            Kind::Polynomial { p } if p < 1.0 => 1.0 / (1.0 - p),
            _ => f64::INFINITY,
        }
    }

    /// Largest argument at which the conjugate is finite and below the
    /// overflow threshold (shrunk slightly inside closed domains so the
    /// derivative stays finite).
    pub fn conj_limit(&self) -> f64 {
        self.conj_limit
    }

    fn find_conj_limit(&self) -> f64 {
        let u = self.conj_dom_upper();
        if u.is_finite() {
            return u - 1e-12 * u.abs().max(1.0);
        }
        let raw = |s: f64| self.conjugate_raw(s);
        let mut hi = 1.0;
        while raw(hi) <= OVERFLOW {
            hi *= 2.0;
            if hi > OVERFLOW {
                return f64::INFINITY;
            }
        }
        let mut lo = hi / 2.0;
        if raw(lo) > OVERFLOW {
            lo = 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if raw(mid) > OVERFLOW {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Two points `x0 < 1 < y0` with finite `φ`, used for compactness bounds.
    pub fn finite_points(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Degenerate => None,
            Kind::CvarIndicator { alpha } => Some((0.5, (1.0 / (1.0 - alpha)).min(2.0))),
            _ => Some((0.5, 2.0)),
        }
    }

    /// `φ(t)`, with `φ(0) = lim_{t↓0} φ(t)` and `+inf` outside the domain.
    pub fn phi(&self, t: f64) -> f64 {
        if t.is_nan() || t < 0.0 {
            return f64::INFINITY;
        }
        match &self.kind {
            Kind::Kl { gamma } => xlogx_m_x_p1(t) / gamma,
            Kind::Chi2 => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    (t - 1.0) * (t - 1.0) / t
                }
            }
            Kind::ModifiedChi2 => (t - 1.0) * (t - 1.0),
            Kind::Burg => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    -t.ln() + t - 1.0
                }
            }
            Kind::TotalVariation => (t - 1.0).abs(),
            Kind::Polynomial { p } => {
                let p = *p;
                ((t.powf(p) - 1.0) - p * (t - 1.0)) / (p * (p - 1.0))
            }
            Kind::CvarIndicator { alpha } => {
                // Relative slack absorbs rounding in 1/(1−α).
                if t <= (1.0 + 1e-12) / (1.0 - alpha) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Degenerate => {
                if t == 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Tail(tail) => tail_phi(tail, t),
        }
    }

    /// `φ(t)/t` for `t = e^L`, stable for very large `t`.
    pub fn phi_over_t_log(&self, log_t: f64) -> f64 {
        let l = log_t;
        match &self.kind {
            Kind::Kl { gamma } => (l - 1.0 + (-l).exp()) / gamma,
            Kind::Chi2 => {
                let e = -(-l).exp_m1();
                e * e
            }
            Kind::ModifiedChi2 => l.exp() - 2.0 + (-l).exp(),
            Kind::Burg => 1.0 - (1.0 + l) * (-l).exp(),
            Kind::TotalVariation => (1.0 - (-l).exp()).abs(),
            Kind::Polynomial { p } => {
                let p = *p;
                (((p - 1.0) * l).exp() - p + (p - 1.0) * (-l).exp()) / (p * (p - 1.0))
            }
            Kind::CvarIndicator { alpha } => {
                if l <= -(1.0 - alpha).ln() + 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Degenerate => {
                if l == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Tail(tail) => {
                if l <= 600.0 {
                    let t = l.exp();
                    return self.phi(t) / t;
                }
                match &tail.spec.log_psi {
                    Some((log_psi, log_dpsi)) => tail_phi_over_t_huge(tail, log_psi, log_dpsi, l),
                    // Clamping gives a lower bound for astronomically large ratios.
                    None => self.phi(600f64.exp()) / 600f64.exp(),
                }
            }
        }
    }

    fn conjugate_raw(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Kl { gamma } => (gamma * s).exp_m1() / gamma,
            Kind::Chi2 => {
                if s <= 1.0 {
                    2.0 - 2.0 * (1.0 - s).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            Kind::ModifiedChi2 => {
                if s >= -2.0 {
                    s + 0.25 * s * s
                } else {
                    -1.0
                }
            }
            Kind::Burg => {
                if s < 1.0 {
                    -(-s).ln_1p()
                } else {
                    f64::INFINITY
                }
            }
            Kind::TotalVariation => {
                if s <= 1.0 {
                    s.max(-1.0)
                } else {
                    f64::INFINITY
                }
            }
            Kind::Polynomial { p } => {
                let p = *p;
                let base = 1.0 + s * (p - 1.0);
                if p > 1.0 {
                    base.max(0.0).powf(p / (p - 1.0)) / p - 1.0 / p
                } else if base > 0.0 {
                    base.powf(p / (p - 1.0)) / p - 1.0 / p
                } else {
                    f64::INFINITY
                }
            }
            Kind::CvarIndicator { alpha } => s.max(0.0) / (1.0 - alpha),
            Kind::Degenerate => s,
            Kind::Tail(tail) => tail.conj(s),
        }
    }

    /// `φ*(s)`; overflow beyond [`OVERFLOW`] maps to `+inf`.
    pub fn conjugate(&self, s: f64) -> f64 {
        let v = self.conjugate_raw(s);
        if v > OVERFLOW || v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// `(φ*)'(s)` without domain checks (right-derivative at kinks).
    pub fn conjugate_deriv_unchecked(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Kl { gamma } => (gamma * s).exp(),
            Kind::Chi2 => 1.0 / (1.0 - s).sqrt(),
            Kind::ModifiedChi2 => {
                if s >= -2.0 {
                    1.0 + 0.5 * s
                } else {
                    0.0
                }
            }
            Kind::Burg => 1.0 / (1.0 - s),
            Kind::TotalVariation => {
                if s >= -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Polynomial { p } => {
                let p = *p;
                let base = 1.0 + s * (p - 1.0);
                if p > 1.0 {
                    base.max(0.0).powf(1.0 / (p - 1.0))
                } else {
                    base.powf(1.0 / (p - 1.0))
                }
            }
            Kind::CvarIndicator { alpha } => {
                if s >= 0.0 {
                    1.0 / (1.0 - alpha)
                } else {
                    0.0
                }
            }
            Kind::Degenerate => 1.0,
            Kind::Tail(tail) => tail.conj_deriv(s),
        }
    }

    /// `(φ*)'(s)` for `s` interior to the conjugate's domain.
    pub fn conjugate_deriv(&self, s: f64) -> Result<f64> {
        let u = self.conj_dom_upper();
        if s.is_nan() || s >= u || (self.conjugate(s).is_infinite()) {
            return Err(Error::Domain(format!("{}: conjugate derivative undefined at s = {s}", self.id())));
        }
        Ok(self.conjugate_deriv_unchecked(s))
    }

    /// `λ φ*(s/λ)` with `0 φ*(s/0) = 0` for `s ≤ 0` and `+inf` for `s > 0`.
    pub fn perspective(&self, s: f64, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return if s <= 0.0 { 0.0 } else { f64::INFINITY };
        }
        let v = lambda * self.conjugate(s / lambda);
        if v > OVERFLOW {
            f64::INFINITY
        } else {
            v
        }
    }

    /// `u(x) = −φ*(−x)`, the utility generated by this divergence as `φ1`.
    pub fn utility(&self, x: f64) -> f64 {
        -self.conjugate(-x)
    }

    /// Whether `φ*(s) > s` for `s ≠ 0` on a test grid.
    pub fn strictly_dominates_identity(&self) -> bool {
        [-5.0, -2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 5.0].iter().all(|&s| self.conjugate(s) > s)
    }

    /// Discrete divergence `Σ p_i φ(q_i/p_i)` between mass vectors.
    pub fn discrete_value(&self, q: &[f64], p: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&qi, &pi) in q.iter().zip(p) {
            total += if pi > 0.0 {
                pi * self.phi(qi / pi)
            } else if qi > 0.0 {
                qi * self.conj_dom_upper()
            } else {
                0.0
            };
        }
        total
    }
}

fn xlogx_m_x_p1(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t * t.ln() - t + 1.0
    }
}

/// `φ(t)/t = s* − φ*(s*)/t` at `φ*'(s*) = t = e^l`, for `t` beyond overflow
/// where the linear and constant parts of the tail are negligible, so that
/// `φ*(s*)/t = ψ(s*)/ψ'(s*)`. Taking that ratio at one `s*` lets the large
/// common terms of `log ψ` and `log ψ'` cancel exactly; comparing `log ψ`
/// with `l` instead loses everything once `l` is large.
fn tail_phi_over_t_huge(tail: &Tail, log_psi: &ScalarFn, log_dpsi: &ScalarFn, l: f64) -> f64 {
    let lc1 = tail.c1.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while lc1 + log_dpsi(hi.exp()) < l {
        // Beyond e^709 the maximiser is not representable.
        if hi >= 709.0 {
            return f64::INFINITY;
        }
        lo = hi;
        hi = (2.0 * hi).min(709.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lc1 + log_dpsi(mid.exp()) < l {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = (0.5 * (lo + hi)).exp();
    s - (log_psi(s) - log_dpsi(s)).exp()
}

fn tail_phi(tail: &Tail, t: f64) -> f64 {
    if t <= 1.0 {
        // The maximiser lies on the exponential branch s ≤ 0.
        return xlogx_m_x_p1(t);
    }
    let g = |s: f64| {
        let c = tail.conj(s);
        if c.is_finite() {
            s * t - c
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut hi = 1.0;
    while tail.conj_deriv(hi) < t && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = g(x2);
        }
    }
    f1.max(f2).max(g(lo)).max(g(hi)).max(0.0)
}

/// `φ(t)` (free-function form).
pub fn eval_phi(d: &Divergence, t: f64) -> f64 {
    d.phi(t)
}

/// `φ*(s)` (free-function form).
pub fn eval_conjugate(d: &Divergence, s: f64) -> f64 {
    d.conjugate(s)
}

/// `(φ*)'(s)` (free-function form).
pub fn eval_conjugate_deriv(d: &Divergence, s: f64) -> Result<f64> {
    d.conjugate_deriv(s)
}

/// `λ φ*(s/λ)` (free-function form).
pub fn perspective_conjugate(d: &Divergence, s: f64, lambda: f64) -> f64 {
    d.perspective(s, lambda)
}

/// Build a divergence whose conjugate is `ψ̃` on `s ≥ 0` and `e^s − 1` on
/// `s ≤ 0`.
pub fn construct_from_tail(spec: TailSpec) -> Result<Divergence> {
    construct_named(spec, "constructed", vec![])
}

fn construct_named(spec: TailSpec, name: &str, params: Vec<(String, f64)>) -> Result<Divergence> {
    let d2 = spec.psi_d2_at0;
    if !(d2.is_finite() && d2 != 0.0) {
        return Err(Error::Construction(format!("psi''(0) must be finite and non-zero, got {d2}")));
    }
    if !(spec.psi_d1_at0.is_finite() && spec.psi_value_at0.is_finite()) {
        return Err(Error::Construction("psi'(0) and psi(0) must be finite".into()));
    }
    let tail = Tail {
        c1: 1.0 / d2,
        c2: (d2 - spec.psi_d1_at0) / d2,
        c3: -spec.psi_value_at0 / d2,
        spec,
    };
    // Increasing and convex on a validation grid.
    let grid: Vec<f64> = (0..=200).map(|k| 50.0 * (k as f64 / 200.0).powi(2)).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| tail.conj(s)).collect();
    for k in 1..grid.len() {
        if vals[k].is_finite() && vals[k - 1].is_finite() && vals[k] < vals[k - 1] - 1e-12 * vals[k].abs().max(1.0) {
            return Err(Error::Construction(format!("conjugate decreases near s = {}", grid[k])));
        }
    }
    for k in 1..grid.len() - 1 {
        let (a, b, c) = (vals[k - 1], vals[k], vals[k + 1]);
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            continue;
        }
        let (ha, hb) = (grid[k] - grid[k - 1], grid[k + 1] - grid[k]);
        let slope_l = (b - a) / ha;
        let slope_r = (c - b) / hb;
        if slope_r < slope_l - 1e-9 * slope_l.abs().max(1.0) {
            return Err(Error::Construction(format!("conjugate is not convex near s = {}", grid[k])));
        }
    }
    if tail.conj_deriv(0.0) < 0.0 {
        return Err(Error::Construction("conjugate derivative is negative at 0".into()));
    }
    Ok(Divergence::new(name, params, Kind::Tail(Arc::new(tail))))
}

/// Template `ψ(s) = (s + e) exp(a log^p(s + e))` shared by the generalized
/// log-normal and entropic/Weibull tailored divergences.
fn log_power_tail(a: f64, p: f64) -> TailSpec {
    let e = std::f64::consts::E;
    let psi = move |s: f64| {
        let l = (s + e).ln();
        (s + e) * (a * l.powf(p)).exp()
    };
    let dpsi = move |s: f64| {
        let l = (s + e).ln();
        (a * l.powf(p)).exp() * (1.0 + a * p * l.powf(p - 1.0))
    };
    let log_psi = move |s: f64| {
        let l = (s + e).ln();
        l + a * l.powf(p)
    };
    let log_dpsi = move |s: f64| {
        let l = (s + e).ln();
        a * l.powf(p) + (a * p * l.powf(p - 1.0)).ln_1p()
    };
    TailSpec {
        psi: Arc::new(psi),
        psi_deriv: Some(Arc::new(dpsi)),
        log_psi: Some((Arc::new(log_psi), Arc::new(log_dpsi))),
        psi_d1_at0: a.exp() * (1.0 + a * p),
        psi_d2_at0: p * p * (a * a + a) * (a - 1.0).exp(),
        psi_value_at0: (a + 1.0).exp(),
    }
}

/// Tailored divergence for CVaR under a generalized log-normal nominal with
/// moment order `d`: `a = 1/(p (σ d)^p)`.
pub fn gl_cvar(sigma: f64, p: f64, d: f64) -> Result<Divergence> {
    if !(sigma > 0.0 && p >= 2.0 && d > 1.0 && sigma.is_finite() && p.is_finite() && d.is_finite()) {
        return Err(Error::Param(format!("gl-cvar requires sigma > 0, p >= 2, d > 1; got ({sigma}, {p}, {d})")));
    }
    let a = 1.0 / (p * (sigma * d).powf(p));
    construct_named(
        log_power_tail(a, p),
        "gl-cvar",
        vec![("sigma".into(), sigma), ("p".into(), p), ("d".into(), d)],
    )
}

/// Tailored divergence for CVaR under a Weibull nominal with shape `k`:
/// `ψ(s) = (s + 1) exp((s + 1)^{k/d})`.
pub fn weibull_power(k: f64, d: f64) -> Result<Divergence> {
    if !(k > 0.0 && d > 1.0 && k.is_finite() && d.is_finite()) {
        return Err(Error::Param(format!("weibull-power requires k > 0, d > 1; got ({k}, {d})")));
    }
    let q = k / d;
    let e = std::f64::consts::E;
    let spec = TailSpec {
        psi: Arc::new(move |s: f64| (s + 1.0) * (s + 1.0).powf(q).exp()),
        psi_deriv: Some(Arc::new(move |s: f64| {
            let w = (s + 1.0).powf(q);
            w.exp() * (1.0 + q * w)
        })),
        log_psi: Some((
            Arc::new(move |s: f64| (s + 1.0).ln() + (s + 1.0).powf(q)),
            Arc::new(move |s: f64| {
                let w = (s + 1.0).powf(q);
                w + (q * w).ln_1p()
            }),
        )),
        psi_d1_at0: e * (1.0 + q),
        psi_d2_at0: e * q * (2.0 * q + 1.0),
        psi_value_at0: e,
    };
    construct_named(spec, "weibull-power", vec![("k".into(), k), ("d".into(), d)])
}

/// Tailored divergence for the entropic risk under a Weibull nominal:
/// `a = 1/(2γλ)^k`.
pub fn entropic_weibull(gamma: f64, lambda: f64, k: f64) -> Result<Divergence> {
    if !(gamma > 0.0 && lambda > 0.0 && k > 1.0 && gamma.is_finite() && lambda.is_finite() && k.is_finite()) {
        return Err(Error::Param(format!(
            "entropic-weibull requires gamma > 0, lambda > 0, k > 1; got ({gamma}, {lambda}, {k})"
        )));
    }
    let a = 1.0 / (2.0 * gamma * lambda).powf(k);
    construct_named(
        log_power_tail(a, k),
        "entropic-weibull",
        vec![("gamma".into(), gamma), ("lambda".into(), lambda), ("k".into(), k)],
    )
}

/// Dispatch for the three tailored families; `params` uses the names of the
/// individual constructors.
pub fn make_tailored(kind: TailoredKind, params: &[(&str, f64)]) -> Result<Divergence> {
    let get = |k: &str| {
        params
            .iter()
            .find(|(n, _)| *n == k)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Param(format!("missing parameter '{k}'")))
    };
    match kind {
        TailoredKind::GlCvar => gl_cvar(get("sigma")?, get("p")?, get("d")?),
        TailoredKind::WeibullPower => weibull_power(get("k")?, get("d")?),
        TailoredKind::EntropicWeibull => entropic_weibull(get("gamma")?, get("lambda")?, get("k")?),
    }
}

/// `I_φ(g, f) = ∫ φ(g/f) f` over `support` from log-densities, or `+inf`
/// when the doubling scheme flags the integral as numerically divergent.
/// Working in logs keeps the ratio meaningful where `f` underflows.
pub fn divergence_value(
    phi: &Divergence,
    log_g: &dyn Fn(f64) -> f64,
    log_f: &dyn Fn(f64) -> f64,
    support: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = support;
    let g = |x: f64| log_g(x).exp();
    let f = |x: f64| log_f(x).exp();
    let (anchor, scale) = locate_mass(&f, lo, hi);
    let opts = QuadOptions::default();
    for (name, dens) in [("g", &g as &dyn Fn(f64) -> f64), ("f", &f)] {
        let mass = integrate_line(dens, lo, hi, anchor, scale, &opts)?;
        match mass {
            Integral::Finite(m) if (m - 1.0).abs() <= 1e-4 => {}
            _ => return Err(Error::Domain(format!("density {name} does not integrate to 1 ({mass:?})"))),
        }
    }
    let recession = phi.conj_dom_upper();
    let integrand = |x: f64| -> f64 {
        let (lg, lf) = (log_g(x), log_f(x));
        if lg == f64::NEG_INFINITY && lf == f64::NEG_INFINITY {
            return 0.0;
        }
        if lf == f64::NEG_INFINITY {
            return lg.exp() * recession;
        }
        if lg == f64::NEG_INFINITY {
            return lf.exp() * phi.phi(0.0);
        }
        let l = lg - lf;
        if l < 27.0 {
            lf.exp() * phi.phi(l.exp())
        } else {
            let gx = lg.exp();
            if gx == 0.0 {
                0.0
            } else {
                gx * phi.phi_over_t_log(l)
            }
        }
    };
    Ok(integrate_line(&integrand, lo, hi, anchor, scale, &opts)?.value())
}

/// Heuristic anchor (approximate mode) and unit scale for ray quadrature.
pub(crate) fn locate_mass(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let mut cands = vec![0.0];
    for k in -3..=6 {
        let m = 10f64.powi(k);
        cands.push(m);
        cands.push(-m);
        cands.push(2.0 * m);
        cands.push(-2.0 * m);
        cands.push(5.0 * m);
        cands.push(-5.0 * m);
    }
    if lo.is_finite() {
        cands.push(lo);
    }
    if hi.is_finite() {
        cands.push(hi);
    }
    let mut best = (f64::NAN, -1.0);
    for x in cands.into_iter().filter(|x| *x >= lo && *x <= hi) {
        let v = f(x);
        if v.is_finite() && v > best.1 {
            best = (x, v);
        }
    }
    let anchor = if best.0.is_finite() { best.0 } else { 0.0 };
    let width = if lo.is_finite() && hi.is_finite() { (hi - lo).min(1.0) } else { 1.0 };
    (anchor, width)
}
