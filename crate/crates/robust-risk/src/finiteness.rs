//! Is a robust risk evaluation finite? A rule table built from tail
//! asymptotics of the composite conjugate against the nominal density, plus
//! numerical probes of the finiteness integral
//! `∫ λ φ2*((φ1*(θ2 − x) + θ1)/λ) f0(x) dx`.
//!
//! Only the rule table ever answers `Infinite`: quadrature that fails to
//! settle is evidence, not proof, so the probes report `Unknown` instead.

use std::fmt;

use serde::Serialize;

use crate::divergences::{divergence_value, Divergence};
use crate::error::{Error, Result};
use crate::nominal::{Family, NominalModel};
use crate::quadrature::{integrate_line, Integral, QuadOptions};
use crate::risk::{RiskKind, RiskSpec};
use crate::table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Finite,
    Infinite,
    ParamDependent,
    Unknown,
}

impl Status {
    /// Cell symbol used in the verdict tables.
    pub fn symbol(&self) -> &'static str {
        match self {
            Status::Finite => "<inf",
            Status::Infinite => "inf",
            Status::ParamDependent => "*",
            Status::Unknown => "?",
        }
    }

    /// Plain-word form for messages.
    pub fn label(&self) -> &'static str {
        match self {
            Status::Finite => "finite",
            Status::Infinite => "infinite",
            Status::ParamDependent => "parameter-dependent",
            Status::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinitenessVerdict {
    pub status: Status,
    /// `(θ1, θ2, λ)` at which the integral converged.
    pub witness: Option<[f64; 3]>,
    pub rationale: String,
}

impl FinitenessVerdict {
    fn rule(status: Status, rationale: impl Into<String>) -> Self {
        Self { status, witness: None, rationale: rationale.into() }
    }
}

/// Risk measure families covered by the rule table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskFamily {
    Cvar,
    Entropic,
}

impl RiskFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cvar" => Ok(Self::Cvar),
            "entropic" => Ok(Self::Entropic),
            other => Err(Error::Parse { input: other.into(), reason: "expected cvar or entropic".into() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cvar => "cvar",
            Self::Entropic => "entropic",
        }
    }
}

/// Growth of `φ2*(φ1*(θ2 − x))` as `x → −∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Growth {
    /// `φ2*` is `+inf` beyond a finite argument.
    Blocked,
    /// `exp(exp(c|x|))`.
    DoubleExp,
    /// `|x|^e`.
    Power(Option<f64>),
    /// `exp(rate |x|)`; `free` when `λ` rescales the rate.
    Exp { rate: Option<f64>, free: bool },
    /// `exp(coef |x|^power)`.
    Stretched { coef: Option<f64>, power: f64, free: bool },
    /// `exp(coef log^power |x|)`.
    LogPow { coef: f64, power: f64 },
}

/// Decay of the nominal density as `x → −∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Decay {
    /// Support bounded below.
    None,
    /// `|x|^{−e}`.
    Power(Option<f64>),
    /// `exp(−coef |x|^power)`.
    Stretched { coef: Option<f64>, power: Option<f64> },
    /// `exp(−coef log^power |x|)`.
    LogPow { coef: Option<f64>, power: f64 },
}

fn fmt_opt(v: Option<f64>, name: &str) -> String {
    v.map_or_else(|| name.to_string(), |x| format!("{x}"))
}

/// Compare a growth rate with a decay rate.
fn compare(g: Growth, d: Decay) -> (Status, String) {
    use Status::*;
    if d == Decay::None {
        return (Finite, "nominal support is bounded below".into());
    }
    match g {
        Growth::Blocked => (Infinite, "φ2* is infinite beyond a finite argument and the loss is unbounded".into()),
        Growth::DoubleExp => (Infinite, "doubly exponential integrand beats every density tail".into()),
        Growth::Power(e) => match d {
            Decay::Stretched { .. } => (Finite, "polynomial integrand against an exponential-type tail".into()),
            Decay::LogPow { power, .. } if power > 1.0 => {
                (Finite, "polynomial integrand against a log-normal-type tail".into())
            }
            Decay::LogPow { .. } => (Unknown, "log-power tail of order 1 is not covered".into()),
            Decay::Power(t) => {
                let rule = format!(
                    "finite iff {} − {} < −1 (integrand |x|^{} against density |x|^−{})",
                    fmt_opt(e, "p/(p−1)"),
                    fmt_opt(t, "(α0+1)"),
                    fmt_opt(e, "p/(p−1)"),
                    fmt_opt(t, "(α0+1)")
                );
                match (e, t) {
                    (Some(e), Some(t)) if e - t < -1.0 => (Finite, rule),
                    (Some(_), Some(_)) => (Infinite, rule),
                    _ => (ParamDependent, rule),
                }
            }
            Decay::None => unreachable!(),
        },
        Growth::Exp { rate, free } => match d {
            Decay::Stretched { coef, power } => match power {
                Some(k) if k > 1.0 => (Finite, format!("exponential integrand against a tail of order exp(−|x|^{k}), k > 1")),
                Some(k) if k < 1.0 => (Infinite, format!("exponential integrand against a tail of order exp(−|x|^{k}), k < 1")),
                Some(_) if free => (
                    ParamDependent,
                    "k = 1: the exponents depend on the constants (finite for large λ in the ball form, \
                     penalty form needs the integrand rate below the density rate)"
                        .into(),
                ),
                Some(_) => {
                    let rule = format!(
                        "k = 1: finite iff {} < {}",
                        fmt_opt(rate, "γ·p/(p−1)"),
                        fmt_opt(coef, "1/λ")
                    );
                    match (rate, coef) {
                        (Some(r), Some(c)) if r < c => (Finite, rule),
                        (Some(_), Some(_)) => (Infinite, rule),
                        _ => (ParamDependent, rule),
                    }
                }
                None => (ParamDependent, "finite iff k > 1; k = 1 depends on the constants; k < 1 infinite".into()),
            },
            Decay::LogPow { .. } | Decay::Power(_) => {
                (Infinite, "exponential integrand against a sub-exponential density tail".into())
            }
            Decay::None => unreachable!(),
        },
        Growth::Stretched { coef, power, free } => match d {
            Decay::Stretched { coef: c0, power: k0 } => match k0 {
                Some(k0) if power < k0 => (Finite, format!("integrand order exp(|x|^{power}) below density order {k0}")),
                Some(k0) if power > k0 => {
                    (Infinite, format!("integrand order exp(|x|^{power}) above density order {k0}"))
                }
                Some(_) => {
                    let rule = format!("equal orders: finite iff {} < {}", fmt_opt(coef, "c"), fmt_opt(c0, "c0"));
                    match (coef, c0, free) {
                        (_, _, true) => (ParamDependent, rule),
                        (Some(a), Some(b), false) if a < b => (Finite, rule),
                        (Some(_), Some(_), false) => (Infinite, rule),
                        _ => (ParamDependent, rule),
                    }
                }
                None => (ParamDependent, format!("finite iff the density order exceeds {power}")),
            },
            _ => (Infinite, "stretched-exponential integrand against a sub-exponential density tail".into()),
        },
        Growth::LogPow { coef, power } => match d {
            Decay::Stretched { .. } => (Finite, "log-power integrand against an exponential-type tail".into()),
            Decay::LogPow { coef: c0, power: p0 } => {
                if power < p0 {
                    (Finite, format!("log-power order {power} below density order {p0}"))
                } else if power > p0 {
                    (Infinite, format!("log-power order {power} above density order {p0}"))
                } else {
                    let rule = format!("equal log-power orders: finite iff {coef} < {}", fmt_opt(c0, "c0"));
                    match c0 {
                        Some(c0) if coef < c0 => (Finite, rule),
                        Some(_) => (Infinite, rule),
                        None => (ParamDependent, rule),
                    }
                }
            }
            Decay::Power(_) if power > 1.0 => {
                (Infinite, "log-power integrand of order above 1 beats every polynomial tail".into())
            }
            _ => (Unknown, "log-power integrand of order 1 is not covered".into()),
        },
    }
}

fn get(params: &[(&str, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

/// `φ2` rows of the rule table: catalog families keyed by the parameter `p`
/// where relevant. Tailored divergences go through [`classify_triple`].
fn growth_of_family(risk: RiskFamily, phi2: &str, params: &[(&str, f64)]) -> Option<Growth> {
    let gamma = get(params, "gamma").unwrap_or(1.0);
    let poly = |p: Option<f64>, above: bool| -> Growth {
        if !above {
            return Growth::Blocked;
        }
        let e = p.map(|p| p / (p - 1.0));
        match risk {
            RiskFamily::Cvar => Growth::Power(e),
            RiskFamily::Entropic => Growth::Exp { rate: e.map(|e| gamma * e), free: false },
        }
    };
    let name = phi2.trim().to_ascii_lowercase().replace('_', "-");
    Some(match name.as_str() {
        "kl" | "kullback-leibler" => match risk {
            RiskFamily::Cvar => Growth::Exp { rate: None, free: true },
            RiskFamily::Entropic => Growth::DoubleExp,
        },
        "polynomial>1" | "polynomial-gt1" => poly(get(params, "p").filter(|p| *p > 1.0), true),
        "polynomial<1" | "polynomial-lt1" => poly(None, false),
        "polynomial" | "poly" => {
            let p = get(params, "p")?;
            poly(Some(p), p > 1.0)
        }
        "modified-chi2" => poly(Some(2.0), true),
        "chi2" | "burg" | "tv" | "total-variation" => Growth::Blocked,
        "degenerate" | "none" => match risk {
            RiskFamily::Cvar => Growth::Power(Some(1.0)),
            RiskFamily::Entropic => Growth::Exp { rate: Some(gamma), free: false },
        },
        _ => return None,
    })
}

fn decay_of_family(nominal: &str, params: &[(&str, f64)]) -> Option<Decay> {
    let name = nominal.trim().to_ascii_lowercase().replace('-', "_");
    Some(match name.as_str() {
        "gaussian" | "normal" => {
            Decay::Stretched { coef: get(params, "sigma").map(|s| 1.0 / (2.0 * s * s)), power: Some(2.0) }
        }
        "weibull" | "weibull_neg" => {
            let k = get(params, "k");
            let coef = match (get(params, "lambda"), k) {
                (Some(l), Some(k)) => Some(l.powf(-k)),
                _ => None,
            };
            Decay::Stretched { coef, power: k }
        }
        "exponential" => Decay::Stretched { coef: get(params, "rate"), power: Some(1.0) },
        "lognormal" | "log_normal" => {
            Decay::LogPow { coef: get(params, "sigma").map(|s| 1.0 / (2.0 * s * s)), power: 2.0 }
        }
        "gen_lognormal" | "gln" | "gln_neg" => {
            let p = get(params, "p")?;
            Decay::LogPow { coef: get(params, "sigma").map(|s| 1.0 / (p * s.powf(p))), power: p }
        }
        "pareto" | "pareto_neg" => Decay::Power(get(params, "alpha0").or(get(params, "alpha")).map(|a| a + 1.0)),
        "student_t" | "student" | "t" => Decay::Power(get(params, "nu").map(|n| n + 1.0)),
        "lottery" | "empirical" => Decay::None,
        _ => return None,
    })
}

/// Rule-table verdict for a risk family, a `φ2` family and a nominal family
/// (whose tail is taken towards `−∞`, the loss side).
///
/// Recognised parameters: `p` (polynomial degree), `gamma` (entropic), `k`
/// and `lambda` (Weibull), `rate` (exponential), `sigma` (Gaussian,
/// log-normal), `alpha0` (Pareto tail index), `nu` (Student t). Missing
/// parameters leave parameter-dependent cells as `ParamDependent`.
pub fn classify(risk: RiskFamily, phi2_family: &str, nominal_family: &str, params: &[(&str, f64)]) -> FinitenessVerdict {
    let (Some(g), Some(d)) = (growth_of_family(risk, phi2_family, params), decay_of_family(nominal_family, params)) else {
        return FinitenessVerdict::rule(
            Status::Unknown,
            format!("no rule for {} / {phi2_family} / {nominal_family}", risk.name()),
        );
    };
    let (status, why) = compare(g, d);
    FinitenessVerdict::rule(status, format!("{} / {phi2_family} / {nominal_family}: {why}", risk.name()))
}

fn growth_of(risk: &RiskSpec, phi2: &Divergence) -> Option<Growth> {
    let family = match risk.kind() {
        RiskKind::Cvar { .. } => RiskFamily::Cvar,
        RiskKind::Entropic { .. } => RiskFamily::Entropic,
        RiskKind::Oce => return None,
    };
    let gamma = match risk.kind() {
        RiskKind::Entropic { gamma } => gamma,
        _ => 1.0,
    };
    let log_pow = |a: f64, p: f64| match family {
        RiskFamily::Cvar => Growth::LogPow { coef: a, power: p },
        RiskFamily::Entropic => Growth::Stretched { coef: Some(a * gamma.powf(p)), power: p, free: false },
    };
    match phi2.name() {
        "gl-cvar" => {
            let (s, p, d) = (phi2.param("sigma")?, phi2.param("p")?, phi2.param("d")?);
            Some(log_pow(1.0 / (p * (s * d).powf(p)), p))
        }
        "entropic-weibull" => {
            let (g, l, k) = (phi2.param("gamma")?, phi2.param("lambda")?, phi2.param("k")?);
            Some(log_pow(1.0 / (2.0 * g * l).powf(k), k))
        }
        "weibull-power" => {
            let q = phi2.param("k")? / phi2.param("d")?;
            Some(match family {
                RiskFamily::Cvar => Growth::Stretched { coef: None, power: q, free: true },
                RiskFamily::Entropic => Growth::DoubleExp,
            })
        }
        "kl" if family == RiskFamily::Entropic || phi2.param("gamma").is_none() => {
            growth_of_family(family, "kl", &[])
        }
        "kl" => Some(Growth::Exp { rate: None, free: true }),
        name => {
            let p = phi2.param("p");
            let mut params = vec![("gamma", gamma)];
            if let Some(p) = p {
                params.push(("p", p));
            }
            growth_of_family(family, name, &params)
        }
    }
}

fn decay_of(model: &NominalModel) -> Decay {
    if model.support().0.is_finite() {
        return Decay::None;
    }
    match model.family() {
        Family::Gaussian { sigma, .. } => Decay::Stretched { coef: Some(1.0 / (2.0 * sigma * sigma)), power: Some(2.0) },
        Family::Weibull { k, lambda } => Decay::Stretched { coef: Some(lambda.powf(-k)), power: Some(*k) },
        Family::Exponential { rate } => Decay::Stretched { coef: Some(*rate), power: Some(1.0) },
        Family::LogNormal { sigma, .. } => Decay::LogPow { coef: Some(1.0 / (2.0 * sigma * sigma)), power: 2.0 },
        Family::GenLogNormal { sigma, p, .. } => Decay::LogPow { coef: Some(1.0 / (p * sigma.powf(*p))), power: *p },
        Family::Pareto { alpha, .. } => Decay::Power(Some(alpha + 1.0)),
        Family::StudentT { nu, .. } => Decay::Power(Some(nu + 1.0)),
        Family::Lottery { .. } | Family::Empirical { .. } => Decay::None,
    }
}

/// Rule-table verdict for concrete objects, including the tailored
/// divergences. Generic OCE risk measures are not covered.
pub fn classify_triple(risk: &RiskSpec, phi2: &Divergence, model: &NominalModel) -> FinitenessVerdict {
    let Some(g) = growth_of(risk, phi2) else {
        return FinitenessVerdict::rule(Status::Unknown, format!("no rule for {} / {}", risk.id(), phi2.id()));
    };
    let (status, why) = compare(g, decay_of(model));
    FinitenessVerdict::rule(status, format!("{} / {} / {}: {why}", risk.id(), phi2.id(), model.id()))
}

/// Column families of the verdict tables.
pub const TABLE_NOMINALS: [&str; 5] = ["gaussian", "weibull", "lognormal", "pareto", "student_t"];
/// Row families of the verdict tables.
pub const TABLE_DIVERGENCES: [&str; 3] = ["kl", "polynomial>1", "polynomial<1"];

/// Verdict table for one risk family: a row per divergence family and a
/// column per nominal family, without parameters.
pub fn verdict_table(risk: RiskFamily) -> Table {
    let mut columns = vec!["divergence".to_string()];
    columns.extend(TABLE_NOMINALS.iter().map(|s| s.to_string()));
    let mut t = Table::new(columns);
    for row in TABLE_DIVERGENCES {
        let mut cells: Vec<Cell> = vec![row.into()];
        for col in TABLE_NOMINALS {
            cells.push(classify(risk, row, col, &[]).status.symbol().into());
        }
        t.push(cells);
    }
    t
}

/// Candidate dual points for [`numeric_probe`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ProbeGrid {
    /// `θ1 ∈ {0, ±1, ±5}`, `θ2 ∈ {0, ±q(0.5), ±q(0.99)}`, `λ ∈ {0.5, 1, 5, 20}`.
    pub fn default_for(model: &NominalModel) -> Self {
        let mut theta2 = vec![0.0];
        for u in [0.5, 0.99] {
            if let Ok(q) = model.quantile(u) {
                if q != 0.0 {
                    theta2.push(q);
                    theta2.push(-q);
                }
            }
        }
        Self { theta1: vec![0.0, 1.0, -1.0, 5.0, -5.0], theta2, lambda: vec![0.5, 1.0, 5.0, 20.0] }
    }

    fn points(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for &l in &self.lambda {
            for &t2 in &self.theta2 {
                for &t1 in &self.theta1 {
                    out.push([t1, t2, l]);
                }
            }
        }
        out
    }
}

/// `∫ λ φ2*((φ1*(θ2 − x) + θ1)/λ) f0(x) dx` with divergence detection.
pub fn finiteness_integral(
    phi1: &Divergence,
    phi2: &Divergence,
    model: &NominalModel,
    point: [f64; 3],
) -> Result<Integral> {
    let [t1, t2, lam] = point;
    let integrand = |x: f64| {
        let d = model.density(x);
        if d > 0.0 {
            d * phi2.perspective(phi1.conjugate(t2 - x) + t1, lam)
        } else {
            0.0
        }
    };
    let (lo, hi) = model.support();
    let (med, scale) = model.quad_anchor_scale();
    let anchor = if t2 > lo && t2 < hi { t2 } else { med };
    integrate_line(&integrand, lo, hi, anchor, scale, &QuadOptions::default())
}

/// Search `grid` for a point where the finiteness integral converges.
pub fn numeric_probe(phi1: &Divergence, phi2: &Divergence, model: &NominalModel, grid: &ProbeGrid) -> FinitenessVerdict {
    if !model.is_continuous() {
        return FinitenessVerdict::rule(Status::Finite, "discrete nominal: finite sums");
    }
    let (mut divergent, mut failed) = (0usize, 0usize);
    let mut worst: Option<[f64; 3]> = None;
    for p in grid.points() {
        match finiteness_integral(phi1, phi2, model, p) {
            Ok(Integral::Finite(v)) => {
                return FinitenessVerdict {
                    status: Status::Finite,
                    witness: Some(p),
                    rationale: format!("integral converged to {v} at (θ1, θ2, λ) = ({}, {}, {})", p[0], p[1], p[2]),
                };
            }
            Ok(Integral::Divergent { increments }) => {
                divergent += 1;
                worst = Some(increments);
            }
            Err(_) => failed += 1,
        }
    }
    let tail = worst.map_or_else(String::new, |w| format!("; last increments {:?}", w));
    FinitenessVerdict::rule(
        Status::Unknown,
        format!("no grid point converged: {divergent} numerically divergent, {failed} quadrature failures{tail}"),
    )
}

/// Sufficient check for losses bounded by `C(1 + Σ|Z_i|)`: looks for one
/// `(θ1, θ2)` with `E[φ2*(θ1 + φ1*(θ2 + C(1 + m|Z_i|)))] < ∞` for every
/// marginal.
pub fn risk_factor_bound_check(
    phi1: &Divergence,
    phi2: &Divergence,
    marginals: &[NominalModel],
    c: f64,
    m: usize,
) -> Result<FinitenessVerdict> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Param(format!("bound constant must be positive, got {c}")));
    }
    if marginals.is_empty() {
        return Err(Error::Param("no risk-factor marginals".into()));
    }
    let grid = [0.0, 1.0, -1.0, 5.0, -5.0];
    let opts = QuadOptions::default();
    let mf = m as f64;
    for &t2 in &grid {
        for &t1 in &grid {
            let all = marginals.iter().all(|z| {
                let integrand = |x: f64| {
                    let d = z.density(x);
                    if d > 0.0 {
                        d * phi2.conjugate(t1 + phi1.conjugate(t2 + c * (1.0 + mf * x.abs())))
                    } else {
                        0.0
                    }
                };
                let (lo, hi) = z.support();
                let (med, scale) = z.quad_anchor_scale();
                matches!(integrate_line(&integrand, lo, hi, med, scale, &opts), Ok(Integral::Finite(_)))
            });
            if all {
                return Ok(FinitenessVerdict {
                    status: Status::Finite,
                    witness: Some([t1, t2, 1.0]),
                    rationale: format!("all {} marginal integrals converged at (θ1, θ2) = ({t1}, {t2})", marginals.len()),
                });
            }
        }
    }
    Ok(FinitenessVerdict::rule(Status::Unknown, "no (θ1, θ2) on the grid made every marginal integral converge"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Content {
    Inside,
    Outside,
    Unknown,
}

/// Whether the density with log `test_log_density` lies in every `φ2`-ball
/// around `model`, i.e.
/// `I_φ2(g, f0) < ∞`. `d` is the moment order the divergence was built for.
pub fn moment_content_check(
    phi2: &Divergence,
    model: &NominalModel,
    d: f64,
    test_log_density: &dyn Fn(f64) -> f64,
) -> Result<Content> {
    if !(d > 1.0) {
        return Err(Error::Param(format!("moment order must exceed 1, got {d}")));
    }
    let log_f = |x: f64| model.log_density(x);
    Ok(match divergence_value(phi2, test_log_density, &log_f, model.support()) {
        Ok(v) if v.is_finite() => Content::Inside,
        Ok(_) => Content::Outside,
        Err(_) => Content::Unknown,
    })
}
