//! A priori box for the dual optimiser.
//!
//! Fenchel–Young with a finite point `t` of `φ` gives `φ*(z) ≥ t z − φ(t)`,
//! which turns the value `V` of any feasible reference point into linear
//! bounds on each `θ` in turn (innermost first), and `φ*(z) ≥ z` bounds `λ`
//! by `(V + E[X]) / r`.

use super::objective::{finite_phi, Evaluator};
use super::{Form, RobustProblem, SearchBox, SolverOptions};
use crate::divergences::Divergence;
use crate::error::{Error, Result};
use crate::nominal::SampleSet;

const FALLBACK: f64 = 1e4;

/// Interval for the `θ` entering `φ`'s conjugate. `coef` multiplies `φ(t)`
/// (the largest admissible `λ` for perspectives) and `other` bounds the
/// absolute value of the inner `θ`s already fixed.
fn interval(d: &Divergence, v: f64, ex: f64, coef: f64, other: f64) -> Option<(f64, f64)> {
    let (x0, y0) = d.finite_points()?;
    let (fx, fy) = (finite_phi(d, x0)?, finite_phi(d, y0)?);
    let lo = (v + x0 * ex + coef * fx + (1.0 - x0) * other) / (x0 - 1.0);
    let hi = (v + y0 * ex + coef * fy + (y0 - 1.0) * other) / (y0 - 1.0);
    (lo.is_finite() && hi.is_finite() && lo <= hi).then_some((lo, hi))
}

fn abs_max((lo, hi): (f64, f64)) -> f64 {
    lo.abs().max(hi.abs())
}

/// Box containing every dual minimiser, widened by `opts.box_pad`.
pub fn compactness_bounds(problem: &RobustProblem, data: &SampleSet, opts: &SolverOptions) -> Result<SearchBox> {
    problem.validate()?;
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let min_x = data.min();
    let ex = data.mean();
    let scale = data.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let eval = Evaluator::new(problem, data, opts.lambda_floor);
    let refs: Vec<Vec<f64>> = match problem.form {
        Form::Penalty => vec![vec![0.0, min_x], vec![0.0, 0.0]],
        Form::Ball => vec![vec![0.0, min_x, 1.0], vec![0.0, 0.0, 1.0]],
        Form::Globalized => vec![vec![0.0, 0.0, min_x, 1.0], vec![0.0, 0.0, 0.0, 1.0]],
        other => return Err(Error::Param(format!("no compactness box for the {} form", other.name()))),
    };
    let r = problem.radius;
    // Any upper bound on the optimal value works; the λ = 0 boundary value
    // keeps λ_max proportional to 1/r.
    let boundary = if r > 0.0 { -min_x } else { f64::INFINITY };
    let v = refs.iter().map(|p| eval.eval(p).value).fold(boundary, f64::min);
    let lambda_max = match problem.form {
        Form::Ball | Form::Globalized => Some(((v + ex) / r).max(opts.lambda_floor * 10.0)),
        _ => None,
    };
    let coef = lambda_max.unwrap_or(1.0);
    let intervals: Option<Vec<(f64, f64)>> = if !v.is_finite() {
        None
    } else {
        match problem.form {
            Form::Penalty | Form::Ball => (|| {
                let t2 = interval(&problem.phi1, v, ex, 1.0, 0.0)?;
                let t1 = interval(&problem.phi2, v, ex, coef, abs_max(t2))?;
                Some(vec![t1, t2])
            })(),
            _ => (|| {
                let t3 = interval(&problem.phi1, v, ex, 1.0, 0.0)?;
                let t2 = interval(&problem.phi2, v, ex, 1.0, abs_max(t3))?;
                let t1 = interval(problem.phi3(), v, ex, coef, abs_max(t2) + abs_max(t3))?;
                Some(vec![t1, t2, t3])
            })(),
        }
    };
    let fallback = intervals.is_none();
    let n_theta = problem.form.dim() - usize::from(lambda_max.is_some());
    let mut ranges =
        intervals.unwrap_or_else(|| vec![(-FALLBACK * scale, FALLBACK * scale); n_theta]);
    if let Some(lm) = lambda_max {
        ranges.push((0.0, lm));
    }
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for (lo, hi) in ranges {
        let mid = 0.5 * (lo + hi);
        let half = (0.5 * (hi - lo)).max(1e-6 * scale) * opts.box_pad;
        lower.push(mid - half);
        upper.push(mid + half);
    }
    Ok(SearchBox { lambda_max: lambda_max.map(|_| *upper.last().expect("non-empty")), lower, upper, fallback })
}
