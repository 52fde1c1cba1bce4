//! Dual reformulations of the composite robust risk measures and their
//! numerical solution.
//!
//! With `s_i = θ2 − X_i` (innermost variable) and sample weights `w_i`:
//!
//! ```text
//! penalty     inf −θ1 − θ2            + Σ w_i φ2*(φ1*(s_i) + θ1)
//! ball        inf −θ1 − θ2 + λ r      + Σ w_i λ φ2*((φ1*(s_i) + θ1)/λ)
//! globalized  inf −θ1 − θ2 − θ3 + λ r + Σ w_i λ φ3*((φ2*(φ1*(θ3 − X_i) + θ2) + θ1)/λ)
//! ```
//!
//! The shortfall forms are threshold problems in `θ2` whose feasibility
//! check is itself a small convex program; see [`shortfall`].
//!
//! Point layouts: penalty `[θ1, θ2]`, ball `[θ1, θ2, λ]`, globalized
//! `[θ1, θ2, θ3, λ]`, shortfall `[θ1, θ2]` with `η` reported as `lambda`.

mod bounds;
mod brute;
pub(crate) mod ellipsoid;
mod objective;
mod shortfall;
mod worst_case;

use serde::Serialize;

use crate::divergences::Divergence;
use crate::error::{Error, Result};
use crate::nominal::SampleSet;
use crate::risk::{oce_minimizer, robust_eu_penalty_point};

pub use bounds::compactness_bounds;
pub use brute::brute_force_primal;
pub use objective::{dual_objective, ObjectiveValue};
pub use worst_case::{primal_value, worst_case_density};

use ellipsoid::{minimize, Settings, Step};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Penalty,
    Ball,
    Globalized,
    ShortfallBall,
    ShortfallPenalty,
    RobustEu,
}

impl Form {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "penalty" => Form::Penalty,
            "ball" => Form::Ball,
            "globalized" | "globalised" => Form::Globalized,
            "shortfall-ball" => Form::ShortfallBall,
            "shortfall-penalty" => Form::ShortfallPenalty,
            "robust-eu" | "eu" => Form::RobustEu,
            other => return Err(Error::Parse { input: other.into(), reason: "unknown formulation".into() }),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Form::Penalty => "penalty",
            Form::Ball => "ball",
            Form::Globalized => "globalized",
            Form::ShortfallBall => "shortfall-ball",
            Form::ShortfallPenalty => "shortfall-penalty",
            Form::RobustEu => "robust-eu",
        }
    }

    pub fn needs_radius(&self) -> bool {
        matches!(self, Form::Ball | Form::Globalized | Form::ShortfallBall)
    }

    /// Number of optimisation variables in the ellipsoid search.
    pub fn dim(&self) -> usize {
        match self {
            Form::Penalty | Form::ShortfallPenalty | Form::ShortfallBall => 2,
            Form::Ball => 3,
            Form::Globalized => 4,
            Form::RobustEu => 1,
        }
    }
}

/// A composite robust risk problem.
#[derive(Clone, Debug)]
pub struct RobustProblem {
    pub form: Form,
    pub phi1: Divergence,
    pub phi2: Divergence,
    pub phi3: Option<Divergence>,
    pub radius: f64,
}

impl RobustProblem {
    pub fn penalty(phi1: Divergence, phi2: Divergence) -> Self {
        Self { form: Form::Penalty, phi1, phi2, phi3: None, radius: 0.0 }
    }

    pub fn ball(phi1: Divergence, phi2: Divergence, radius: f64) -> Self {
        Self { form: Form::Ball, phi1, phi2, phi3: None, radius }
    }

    pub fn globalized(phi1: Divergence, phi2: Divergence, phi3: Divergence, radius: f64) -> Self {
        Self { form: Form::Globalized, phi1, phi2, phi3: Some(phi3), radius }
    }

    pub fn shortfall_ball(phi1: Divergence, phi2: Divergence, radius: f64) -> Self {
        Self { form: Form::ShortfallBall, phi1, phi2, phi3: None, radius }
    }

    pub fn shortfall_penalty(phi1: Divergence, phi2: Divergence) -> Self {
        Self { form: Form::ShortfallPenalty, phi1, phi2, phi3: None, radius: 0.0 }
    }

    pub fn robust_eu(phi1: Divergence, phi2: Divergence) -> Self {
        Self { form: Form::RobustEu, phi1, phi2, phi3: None, radius: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.form.needs_radius() && !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::Param(format!("radius must be a finite non-negative number, got {}", self.radius)));
        }
        if !self.form.needs_radius() && self.radius != 0.0 {
            return Err(Error::Param(format!("the {} form takes no radius", self.form.name())));
        }
        match (self.form, &self.phi3) {
            (Form::Globalized, None) => Err(Error::Param("the globalized form needs phi3".into())),
            (Form::Globalized, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(Error::Param("phi3 is only used by the globalized form".into())),
        }
    }

    pub(crate) fn phi3(&self) -> &Divergence {
        self.phi3.as_ref().expect("validated globalized problem")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Target for the certified optimality gap (relative above magnitude 1).
    pub tol: f64,
    pub max_iter: usize,
    pub lambda_floor: f64,
    /// Factor by which the compactness box is widened about its midpoint.
    pub box_pad: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200_000, lambda_floor: 1e-10, box_pad: 2.0 }
    }
}

/// Search region for the dual variables, in the form's point layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lambda_max: Option<f64>,
    /// The default box was used because a divergence lacks finite points.
    pub fallback: bool,
}

impl SearchBox {
    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    fn center_half(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect();
        let h = self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (b - a)).collect();
        (c, h)
    }
}

/// Where the reported optimum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Ellipsoid minimum with `λ > 0` (or no `λ`).
    Interior,
    /// The `λ = 0` boundary: the essential infimum of the payoff.
    Boundary,
    /// Zero radius: the nominal risk measure.
    Nominal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualSolution {
    pub theta: Vec<f64>,
    pub lambda: Option<f64>,
    pub value: f64,
    pub iterations: usize,
    pub certified_gap: f64,
    pub branch: Branch,
    /// Worst-case weights `(g*, ḡ*)` over the samples, when certified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<(Vec<f64>, Vec<f64>)>,
}

impl DualSolution {
    /// Dual point in the form's layout (`θ` followed by `λ` when present).
    pub fn point(&self) -> Vec<f64> {
        let mut p = self.theta.clone();
        if let Some(l) = self.lambda {
            p.push(l);
        }
        p
    }
}

/// Solve the dual of `problem` on `data`.
pub fn solve(problem: &RobustProblem, data: &SampleSet, opts: &SolverOptions) -> Result<DualSolution> {
    problem.validate()?;
    if data.is_empty() {
        return Err(Error::Param("empty sample set".into()));
    }
    let mut sol = match problem.form {
        Form::ShortfallBall | Form::ShortfallPenalty => return shortfall::solve(problem, data, opts),
        Form::RobustEu => {
            let (theta, value) = robust_eu_penalty_point(&problem.phi1, &problem.phi2, data)?;
            return Ok(DualSolution {
                theta: vec![theta],
                lambda: None,
                value,
                iterations: 0,
                certified_gap: 0.0,
                branch: Branch::Interior,
                worst_case: None,
            });
        }
        Form::Ball if problem.radius == 0.0 => nominal_solution(problem, data)?,
        // A degenerate φ2 admits only the nominal model.
        Form::Penalty | Form::Ball if problem.phi2.is_degenerate() => nominal_solution(problem, data)?,
        Form::Globalized if problem.radius == 0.0 => {
            // The outer ball collapses to the nominal: a plain penalty problem.
            let inner = RobustProblem::penalty(problem.phi1.clone(), problem.phi2.clone());
            let s = solve_ellipsoid(&inner, data, opts)?;
            let mut theta = vec![0.0];
            theta.extend(s.theta);
            DualSolution { theta, lambda: None, branch: Branch::Nominal, worst_case: None, ..s }
        }
        _ => solve_ellipsoid(problem, data, opts)?,
    };
    if matches!(problem.form, Form::Penalty | Form::Ball) && sol.branch != Branch::Boundary {
        sol.worst_case = worst_case_density(problem, data, &sol).ok();
    }
    Ok(sol)
}

fn nominal_solution(problem: &RobustProblem, data: &SampleSet) -> Result<DualSolution> {
    let (eta, value) = oce_minimizer(&problem.phi1, data)?;
    Ok(DualSolution {
        theta: vec![0.0, -eta],
        lambda: None,
        value,
        iterations: 0,
        certified_gap: 0.0,
        branch: Branch::Nominal,
        worst_case: None,
    })
}

fn solve_ellipsoid(problem: &RobustProblem, data: &SampleSet, opts: &SolverOptions) -> Result<DualSolution> {
    let bx = compactness_bounds(problem, data, opts)?;
    let (center, half) = bx.center_half();
    let eval = objective::Evaluator::new(problem, data, opts.lambda_floor);
    let settings = Settings { tol: opts.tol, max_iter: opts.max_iter };
    let out = minimize(&center, &half, &settings, |x| eval.step(x), |_, _| false);
    let has_lambda = matches!(problem.form, Form::Ball | Form::Globalized);
    let boundary = if has_lambda { -data.min() } else { f64::INFINITY };
    if !out.found() && !boundary.is_finite() {
        return Err(Error::NonFinite(format!(
            "dual objective is +inf on the whole search region for {} / {}; the finiteness integral diverges",
            problem.phi1.id(),
            problem.phi2.id()
        )));
    }
    if boundary <= out.f {
        let n = problem.form.dim() - 1;
        let mut theta = vec![0.0; n];
        theta[n - 1] = data.min();
        return Ok(DualSolution {
            theta,
            lambda: Some(0.0),
            value: boundary,
            iterations: out.iterations,
            certified_gap: (boundary - out.lower).max(0.0),
            branch: Branch::Boundary,
            worst_case: None,
        });
    }
    if !out.converged {
        return Err(Error::IterationLimit { iterations: out.iterations, best: out.f });
    }
    let (theta, lambda) = if has_lambda {
        let n = out.x.len();
        (out.x[..n - 1].to_vec(), Some(out.x[n - 1]))
    } else {
        (out.x.clone(), None)
    };
    Ok(DualSolution {
        theta,
        lambda,
        value: out.f,
        iterations: out.iterations,
        certified_gap: out.gap(),
        branch: Branch::Interior,
        worst_case: None,
    })
}

pub(crate) fn step_from(v: ObjectiveValue) -> Step {
    match v.cut {
        Some((grad, violation)) => Step::Cut { grad, violation },
        None => Step::Value { f: v.value, grad: v.subgradient },
    }
}
