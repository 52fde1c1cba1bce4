//! Recovering `φ2* ∘ φ1*` (or the utility `u`) from robust values of
//! small-probability lotteries `X_p = x` w.p. `p`, 0 otherwise.
//!
//! As `p ↓ 0`, `ρ(X_p)/p → φ2*(φ1*(−x))` for the penalty OCE, and
//! `CE(X_p)/p → u(x)` without ambiguity. Each lottery is evaluated exactly
//! on its two atoms.

use serde::Serialize;

use crate::divergences::Divergence;
use crate::dual::{solve, Form, RobustProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::exec;
use crate::nominal::SampleSet;
use crate::risk::{nominal_oce, RiskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Composite,
    Utility,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElicitationResult {
    pub x: f64,
    /// `(p, ratio)` pairs in the order of the `p` sequence.
    pub estimates: Vec<(f64, f64)>,
    /// Richardson extrapolation of the last two ratios to `p = 0`.
    pub extrapolated: f64,
    pub target_kind: TargetKind,
    /// Closed-form limit from the catalog conjugates.
    pub reference: f64,
    /// Image of `φ1*`: only `φ2*` on this interval can be recovered.
    pub image: (f64, f64),
}

impl ElicitationResult {
    /// Absolute errors of the ratios against the reference.
    pub fn errors(&self) -> Vec<f64> {
        self.estimates.iter().map(|(_, r)| (r - self.reference).abs()).collect()
    }
}

/// `p = 2^{-k}` for `k = 4..=16`.
pub fn default_p_seq() -> Vec<f64> {
    (4..=16).map(|k| 2f64.powi(-k)).collect()
}

fn check_p_seq(p_seq: &[f64]) -> Result<()> {
    if p_seq.len() < 2 {
        return Err(Error::Param("need at least two probabilities".into()));
    }
    if p_seq.iter().any(|p| !(*p > 0.0 && *p <= 0.5)) {
        return Err(Error::Param("probabilities must lie in (0, 1/2]".into()));
    }
    if p_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Param("probabilities must be strictly decreasing".into()));
    }
    Ok(())
}

fn richardson(estimates: &[(f64, f64)]) -> f64 {
    let (pa, va) = estimates[estimates.len() - 2];
    let (pb, vb) = estimates[estimates.len() - 1];
    vb - pb * (va - vb) / (pa - pb)
}

fn conj_image(phi: &Divergence) -> (f64, f64) {
    let lo = phi.conjugate(-1e6).min(phi.conjugate(-50.0));
    (lo, phi.conj_dom_upper().max(phi.conjugate(phi.conj_limit())))
}

fn check_full_domain(phi: &Divergence, role: &str) -> Result<()> {
    if phi.conj_dom_upper().is_finite() {
        return Err(Error::Precondition(format!("{role} = {} has a bounded conjugate domain", phi.id())));
    }
    if !phi.strictly_dominates_identity() {
        return Err(Error::Precondition(format!("{role} = {} does not satisfy φ*(s) > s for s ≠ 0", phi.id())));
    }
    Ok(())
}

/// Derivative of `φ2* ∘ φ1*` at 0 by central differences.
fn composite_slope_at_zero(phi1: &Divergence, phi2: &Divergence) -> f64 {
    let h = 1e-6;
    let c = |s: f64| phi2.conjugate(phi1.conjugate(s));
    (c(h) - c(-h)) / (2.0 * h)
}

/// Small-`p` limit of `ρ(X_p)/p` for a penalty or shortfall-penalty problem.
///
/// A degenerate `φ2` is accepted: the limit is then `φ1*(−x)`, the negative
/// of what [`ce_recover`] returns.
pub fn elicit_composite(problem: &RobustProblem, x: f64, p_seq: &[f64]) -> Result<ElicitationResult> {
    problem.validate()?;
    check_p_seq(p_seq)?;
    if !x.is_finite() {
        return Err(Error::Param("outcome must be finite".into()));
    }
    let (phi1, phi2) = (&problem.phi1, &problem.phi2);
    match problem.form {
        Form::Penalty | Form::ShortfallPenalty => {}
        f => return Err(Error::Param(format!("elicitation needs a penalty form, got {}", f.name()))),
    }
    check_full_domain(phi1, "phi1")?;
    if !phi2.is_degenerate() {
        check_full_domain(phi2, "phi2")?;
    }
    if problem.form == Form::ShortfallPenalty {
        let slope = composite_slope_at_zero(phi1, phi2);
        if (slope - 1.0).abs() > 1e-4 {
            return Err(Error::Precondition(format!(
                "shortfall elicitation needs (φ2*∘φ1*)'(0) = 1, got {slope:.6}"
            )));
        }
    }
    let ratios = exec::map(p_seq.len(), |i| -> Result<f64> {
        let p = p_seq[i];
        if x == 0.0 {
            return Ok(0.0);
        }
        let data = SampleSet::lottery(x, p)?;
        // The value scales with p, so the absolute tolerance must too.
        let opts = SolverOptions { tol: (1e-7 * p).min(1e-9), ..SolverOptions::default() };
        Ok(solve(problem, &data, &opts)?.value / p)
    });
    let estimates = collect(p_seq, ratios)?;
    Ok(ElicitationResult {
        x,
        extrapolated: richardson(&estimates),
        estimates,
        target_kind: TargetKind::Composite,
        reference: phi2.conjugate(phi1.conjugate(-x)),
        image: conj_image(phi1),
    })
}

/// Small-`p` limit of `CE(X_p)/p = −ρ(X_p)/p`, which recovers `u(x)`.
pub fn ce_recover(spec: &RiskSpec, x: f64, p_seq: &[f64]) -> Result<ElicitationResult> {
    check_p_seq(p_seq)?;
    if !x.is_finite() {
        return Err(Error::Param("outcome must be finite".into()));
    }
    if spec.utility(0.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("{} has u(0) ≠ 0", spec.id())));
    }
    let grid = [-5.0, -2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 5.0];
    if grid.iter().any(|&s| spec.utility(s) >= s) {
        return Err(Error::Precondition(format!("{} does not satisfy u(x) < x for x ≠ 0", spec.id())));
    }
    let ratios = exec::map(p_seq.len(), |i| -> Result<f64> {
        let p = p_seq[i];
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(-nominal_oce(spec, &SampleSet::lottery(x, p)?)? / p)
    });
    let estimates = collect(p_seq, ratios)?;
    Ok(ElicitationResult {
        x,
        extrapolated: richardson(&estimates),
        estimates,
        target_kind: TargetKind::Utility,
        reference: spec.utility(x),
        image: conj_image(spec.phi1()),
    })
}

fn collect(p_seq: &[f64], ratios: Vec<Result<f64>>) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(p_seq.len());
    for (&p, r) in p_seq.iter().zip(ratios) {
        let r = r?;
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("lottery ratio at p = {p} is not finite")));
        }
        out.push((p, r));
    }
    Ok(out)
}
