//! Robust shortfall risk: the smallest `θ2` whose losses
//! `a_i = φ1*(−θ2 − X_i)` pass a robust acceptability test.
//!
//! ```text
//! ball      ∃ θ1, η ≥ 0:  Σ w_i η φ2*((a_i + θ1)/η) ≤ θ1 − η r
//! penalty   ∃ θ1:         Σ w_i φ2*(a_i + θ1)       ≤ θ1
//! ```
//!
//! Both tests are monotone in `θ2`, so the outer problem is a bisection.

use super::ellipsoid::{minimize, Settings, Step};
use super::objective::finite_phi;
use super::{Branch, DualSolution, Form, RobustProblem, SolverOptions};
use crate::divergences::Divergence;
use crate::error::{Error, Result};
use crate::exec::sum_by;
use crate::nominal::SampleSet;
use crate::optim::{bisect_threshold, minimize_convex};
use crate::risk::{nominal_shortfall, RiskSpec};

struct Inner {
    feasible: bool,
    theta1: f64,
    eta: Option<f64>,
    iterations: usize,
}

impl Inner {
    fn infeasible() -> Self {
        Self { feasible: false, theta1: f64::NAN, eta: None, iterations: 0 }
    }
}

struct Check<'a> {
    problem: &'a RobustProblem,
    data: &'a SampleSet,
    opts: &'a SolverOptions,
    scale: f64,
}

impl Check<'_> {
    fn losses(&self, theta2: f64) -> Option<Vec<f64>> {
        let phi1 = &self.problem.phi1;
        let a: Vec<f64> = self.data.values.iter().map(|x| phi1.conjugate(-theta2 - x)).collect();
        let bad = a.iter().zip(&self.data.weights).any(|(v, w)| *w > 0.0 && !v.is_finite());
        (!bad).then_some(a)
    }

    fn run(&self, theta2: f64) -> Inner {
        let Some(a) = self.losses(theta2) else {
            return Inner::infeasible();
        };
        match self.problem.form {
            Form::ShortfallPenalty => self.penalty(&a),
            _ => self.ball(&a),
        }
    }

    fn extremes(&self, a: &[f64]) -> (f64, f64, f64) {
        let w = &self.data.weights;
        let ea = sum_by::<1, _>(a.len(), |i| [if w[i] == 0.0 { 0.0 } else { w[i] * a[i] }])[0];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (v, wi) in a.iter().zip(w) {
            if *wi > 0.0 {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (ea, lo, hi)
    }

    fn penalty(&self, a: &[f64]) -> Inner {
        let phi2 = &self.problem.phi2;
        let w = &self.data.weights;
        let (_, amin, amax) = self.extremes(a);
        let h = |t: f64| {
            sum_by::<1, _>(a.len(), |i| [if w[i] == 0.0 { 0.0 } else { w[i] * phi2.conjugate(a[i] + t) }])[0] - t
        };
        match minimize_convex(h, -amax - 1.0, -amin + 1.0, 60) {
            Some(m) => Inner { feasible: m.value <= 0.0, theta1: m.x, eta: None, iterations: 1 },
            None => Inner::infeasible(),
        }
    }

    fn ball(&self, a: &[f64]) -> Inner {
        let phi2 = &self.problem.phi2;
        let r = self.problem.radius;
        let w = &self.data.weights;
        let (ea, _, amax) = self.extremes(a);
        // Σ w η φ2*(·/η) ≥ E[a] + θ1 bounds the test below by E[a] + η r.
        if ea > 0.0 {
            return Inner::infeasible();
        }
        if amax <= 0.0 {
            return Inner { feasible: true, theta1: -amax, eta: Some(0.0), iterations: 0 };
        }
        let eta_max = -ea / r;
        if !(eta_max > self.opts.lambda_floor) {
            return Inner::infeasible();
        }
        let (lo, hi) = theta1_range(phi2, ea, eta_max).unwrap_or((-1e4 * self.scale, 1e4 * self.scale));
        let pad = self.opts.box_pad;
        let center = [0.5 * (lo + hi), 0.5 * eta_max];
        let half = [pad * 0.5 * (hi - lo).max(1e-6), pad * 0.5 * eta_max];
        let lim2 = phi2.conj_limit();
        let floor = self.opts.lambda_floor;
        let oracle = |x: &[f64]| -> Step {
            let (t1, eta) = (x[0], x[1]);
            if eta < floor {
                return Step::Cut { grad: vec![0.0, -1.0], violation: floor - eta };
            }
            if amax + t1 > lim2 * eta {
                return Step::Cut { grad: vec![1.0, -lim2], violation: amax + t1 - lim2 * eta };
            }
            let s = sum_by::<3, _>(a.len(), |i| {
                if w[i] == 0.0 {
                    return [0.0; 3];
                }
                let z = (a[i] + t1) / eta;
                let c = phi2.conjugate(z);
                let d = phi2.conjugate_deriv_unchecked(z);
                [w[i] * eta * c, w[i] * d, w[i] * (c - z * d)]
            });
            let f = s[0] - t1 + eta * r;
            if !f.is_finite() {
                return Step::Cut { grad: vec![1.0, -lim2], violation: 0.0 };
            }
            Step::Value { f, grad: vec![s[1] - 1.0, s[2] + r] }
        };
        let settings = Settings { tol: self.opts.tol, max_iter: self.opts.max_iter };
        let out = minimize(&center, &half, &settings, oracle, |f, lower| f <= 0.0 || lower > 0.0);
        Inner { feasible: out.f <= 0.0, theta1: out.x[0], eta: Some(out.x[1]), iterations: out.iterations }
    }
}

/// Range of `θ1` compatible with a non-positive test value, from
/// `η φ2*(z/η) ≥ t z − η φ2(t)` at the finite points of `φ2`.
fn theta1_range(phi2: &Divergence, ea: f64, eta_max: f64) -> Option<(f64, f64)> {
    let (x0, y0) = phi2.finite_points()?;
    let (fx, fy) = (finite_phi(phi2, x0)?, finite_phi(phi2, y0)?);
    let lo = (-x0 * ea + eta_max * fx) / (x0 - 1.0);
    let hi = (-y0 * ea + eta_max * fy) / (y0 - 1.0);
    (lo <= hi).then_some((lo, hi))
}

pub(super) fn solve(problem: &RobustProblem, data: &SampleSet, opts: &SolverOptions) -> Result<DualSolution> {
    if problem.form == Form::ShortfallBall && problem.radius == 0.0 {
        let value = nominal_shortfall(&RiskSpec::oce(problem.phi1.clone()), data)?;
        return Ok(DualSolution {
            theta: vec![0.0, value],
            lambda: None,
            value,
            iterations: 0,
            certified_gap: 0.0,
            branch: Branch::Nominal,
            worst_case: None,
        });
    }
    let scale = data.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let check = Check { problem, data, opts, scale };
    let tol = 1e-11 * scale;
    let mut iterations = 0usize;
    let theta2 = bisect_threshold(
        |t| {
            let r = check.run(t);
            iterations += r.iterations;
            r.feasible
        },
        -data.max() - 1.0,
        -data.min() + 1.0,
        tol,
        200,
        60,
    )
    .ok_or_else(|| {
        Error::Infeasible(format!(
            "no capital level passes the robust {} test for {} / {}",
            problem.form.name(),
            problem.phi1.id(),
            problem.phi2.id()
        ))
    })?;
    let inner = check.run(theta2);
    Ok(DualSolution {
        theta: vec![inner.theta1, theta2],
        lambda: inner.eta,
        value: theta2,
        iterations: iterations + inner.iterations,
        certified_gap: tol,
        branch: Branch::Interior,
        worst_case: None,
    })
}
