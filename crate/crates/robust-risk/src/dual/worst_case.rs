use super::objective::Evaluator;
use super::{Branch, DualSolution, Form, RobustProblem};
use crate::error::{Error, Result};
use crate::nominal::SampleSet;

/// Worst-case sample weights `(g*, ḡ*)` read off the dual solution:
/// `g*_i ∝ w_i φ2*'((φ1*(θ2 − X_i) + θ1)/λ)` and `ḡ*_i ∝ g*_i φ1*'(θ2 − X_i)`.
///
/// Requires a dual point interior to the objective's domain (checked by
/// finite perturbations) and, for the ball form, `λ` above the floor.
pub fn worst_case_density(
    problem: &RobustProblem,
    data: &SampleSet,
    sol: &DualSolution,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (phi1, phi2) = (&problem.phi1, &problem.phi2);
    let w = &data.weights;
    if sol.branch == Branch::Nominal && problem.form == Form::Ball {
        let t2 = sol.theta[1];
        let gbar: Vec<f64> = data.values.iter().zip(w).map(|(x, wi)| wi * phi1.conjugate_deriv_unchecked(t2 - x)).collect();
        return Ok((w.clone(), normalise(gbar)?));
    }
    let lambda = match problem.form {
        Form::Penalty => 1.0,
        Form::Ball => {
            let l = sol.lambda.unwrap_or(0.0);
            if !(l > 1e-10) {
                return Err(Error::Degenerate(format!("λ* = {l} is at the floor; no worst-case density")));
            }
            l
        }
        other => return Err(Error::Degenerate(format!("no worst-case extraction for the {} form", other.name()))),
    };
    let point = sol.point();
    let eval = Evaluator::new(problem, data, 0.0);
    for j in 0..point.len() {
        for sign in [-1.0, 1.0] {
            let mut p = point.clone();
            p[j] += sign * 1e-6 * p[j].abs().max(1.0);
            if !eval.eval(&p).value.is_finite() {
                return Err(Error::Degenerate("dual solution is not interior to the finiteness domain".into()));
            }
        }
    }
    let (t1, t2) = (sol.theta[0], sol.theta[1]);
    let mut g = Vec::with_capacity(data.len());
    let mut gbar = Vec::with_capacity(data.len());
    for (x, wi) in data.values.iter().zip(w) {
        let s = t2 - x;
        let d2 = phi2.conjugate_deriv_unchecked((phi1.conjugate(s) + t1) / lambda);
        let gi = wi * d2;
        g.push(gi);
        gbar.push(gi * phi1.conjugate_deriv_unchecked(s));
    }
    Ok((normalise(g)?, normalise(gbar)?))
}

fn normalise(v: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if !(total > 1e-12) || !total.is_finite() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Degenerate(format!("worst-case mass {total} cannot be normalised")));
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Discrete primal objective `Σ ḡ_i(−X_i) − I_φ1(ḡ, g)`, minus `I_φ2(g, w)`
/// for the penalty form. For the ball form the caller checks
/// `I_φ2(g, w) ≤ r` separately.
pub fn primal_value(problem: &RobustProblem, data: &SampleSet, g: &[f64], gbar: &[f64]) -> f64 {
    let gain: f64 = gbar.iter().zip(&data.values).map(|(q, x)| -q * x).sum();
    let inner = problem.phi1.discrete_value(gbar, g);
    let outer = match problem.form {
        Form::Penalty => problem.phi2.discrete_value(g, &data.weights),
        _ => 0.0,
    };
    gain - inner - outer
}
