use super::ellipsoid::Step;
use super::{step_from, Form, RobustProblem};
use crate::divergences::Divergence;
use crate::exec::sum_by;
use crate::nominal::SampleSet;

/// Dual objective at a point, with a subgradient, or a separating cut when
/// the point lies outside the objective's effective domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub subgradient: Vec<f64>,
    /// `(normal, violation)`: every point of the domain satisfies
    /// `normal·(y − x) ≤ −violation`.
    pub cut: Option<(Vec<f64>, f64)>,
}

impl ObjectiveValue {
    fn cut(grad: Vec<f64>, violation: f64) -> Self {
        let n = grad.len();
        Self { value: f64::INFINITY, subgradient: vec![f64::NAN; n], cut: Some((grad, violation)) }
    }

    fn value(value: f64, subgradient: Vec<f64>) -> Self {
        Self { value, subgradient, cut: None }
    }
}

pub(crate) struct Evaluator<'a> {
    problem: &'a RobustProblem,
    data: &'a SampleSet,
    min_x: f64,
    lambda_floor: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a RobustProblem, data: &'a SampleSet, lambda_floor: f64) -> Self {
        Self { problem, data, min_x: data.min(), lambda_floor }
    }

    pub fn step(&self, x: &[f64]) -> Step {
        step_from(self.eval(x))
    }

    pub fn eval(&self, x: &[f64]) -> ObjectiveValue {
        match self.problem.form {
            Form::Penalty => self.penalty(x),
            Form::Ball => self.ball(x),
            Form::Globalized => self.globalized(x),
            other => panic!("no smooth dual objective for the {} form", other.name()),
        }
    }

    fn weight(&self, i: usize) -> f64 {
        self.data.weights[i]
    }

    fn penalty(&self, x: &[f64]) -> ObjectiveValue {
        let (phi1, phi2) = (&self.problem.phi1, &self.problem.phi2);
        let (t1, t2) = (x[0], x[1]);
        let smax = t2 - self.min_x;
        if smax > phi1.conj_limit() {
            return ObjectiveValue::cut(vec![0.0, 1.0], smax - phi1.conj_limit());
        }
        let d1max = phi1.conjugate_deriv_unchecked(smax);
        let amax = phi1.conjugate(smax) + t1;
        if amax > phi2.conj_limit() {
            return ObjectiveValue::cut(vec![1.0, d1max], amax - phi2.conj_limit());
        }
        let s = sum_by::<3, _>(self.data.len(), |i| {
            let w = self.weight(i);
            if w == 0.0 {
                return [0.0; 3];
            }
            let si = t2 - self.data.values[i];
            let a = phi1.conjugate(si) + t1;
            let d2 = phi2.conjugate_deriv_unchecked(a);
            [w * phi2.conjugate(a), w * d2, w * d2 * phi1.conjugate_deriv_unchecked(si)]
        });
        let f = -t1 - t2 + s[0];
        if !f.is_finite() {
            return ObjectiveValue::cut(vec![1.0, d1max], 0.0);
        }
        ObjectiveValue::value(f, vec![-1.0 + s[1], -1.0 + s[2]])
    }

    fn ball(&self, x: &[f64]) -> ObjectiveValue {
        let (phi1, phi2) = (&self.problem.phi1, &self.problem.phi2);
        let r = self.problem.radius;
        let (t1, t2, lam) = (x[0], x[1], x[2]);
        if lam < self.lambda_floor {
            return ObjectiveValue::cut(vec![0.0, 0.0, -1.0], self.lambda_floor - lam);
        }
        let smax = t2 - self.min_x;
        if smax > phi1.conj_limit() {
            return ObjectiveValue::cut(vec![0.0, 1.0, 0.0], smax - phi1.conj_limit());
        }
        let d1max = phi1.conjugate_deriv_unchecked(smax);
        let amax = phi1.conjugate(smax) + t1;
        let lim2 = phi2.conj_limit();
        if amax > lim2 * lam {
            return ObjectiveValue::cut(vec![1.0, d1max, -lim2], amax - lim2 * lam);
        }
        let s = sum_by::<4, _>(self.data.len(), |i| {
            let w = self.weight(i);
            if w == 0.0 {
                return [0.0; 4];
            }
            let si = t2 - self.data.values[i];
            let z = (phi1.conjugate(si) + t1) / lam;
            let c = phi2.conjugate(z);
            let d2 = phi2.conjugate_deriv_unchecked(z);
            [w * lam * c, w * d2, w * d2 * phi1.conjugate_deriv_unchecked(si), w * (c - z * d2)]
        });
        let f = -t1 - t2 + lam * r + s[0];
        if !f.is_finite() {
            return ObjectiveValue::cut(vec![1.0, d1max, -lim2], 0.0);
        }
        ObjectiveValue::value(f, vec![-1.0 + s[1], -1.0 + s[2], r + s[3]])
    }

    fn globalized(&self, x: &[f64]) -> ObjectiveValue {
        let (phi1, phi2, phi3) = (&self.problem.phi1, &self.problem.phi2, self.problem.phi3());
        let r = self.problem.radius;
        let (t1, t2, t3, lam) = (x[0], x[1], x[2], x[3]);
        if lam < self.lambda_floor {
            return ObjectiveValue::cut(vec![0.0, 0.0, 0.0, -1.0], self.lambda_floor - lam);
        }
        let smax = t3 - self.min_x;
        if smax > phi1.conj_limit() {
            return ObjectiveValue::cut(vec![0.0, 0.0, 1.0, 0.0], smax - phi1.conj_limit());
        }
        let d1max = phi1.conjugate_deriv_unchecked(smax);
        let amax = phi1.conjugate(smax) + t2;
        if amax > phi2.conj_limit() {
            return ObjectiveValue::cut(vec![0.0, 1.0, d1max, 0.0], amax - phi2.conj_limit());
        }
        let d2max = phi2.conjugate_deriv_unchecked(amax);
        let bmax = phi2.conjugate(amax) + t1;
        let lim3 = phi3.conj_limit();
        if bmax > lim3 * lam {
            return ObjectiveValue::cut(vec![1.0, d2max, d2max * d1max, -lim3], bmax - lim3 * lam);
        }
        let s = sum_by::<5, _>(self.data.len(), |i| {
            let w = self.weight(i);
            if w == 0.0 {
                return [0.0; 5];
            }
            let si = t3 - self.data.values[i];
            let a = phi1.conjugate(si) + t2;
            let z = (phi2.conjugate(a) + t1) / lam;
            let c = phi3.conjugate(z);
            let d3 = phi3.conjugate_deriv_unchecked(z);
            let d32 = d3 * phi2.conjugate_deriv_unchecked(a);
            [w * lam * c, w * d3, w * d32, w * d32 * phi1.conjugate_deriv_unchecked(si), w * (c - z * d3)]
        });
        let f = -t1 - t2 - t3 + lam * r + s[0];
        if !f.is_finite() {
            return ObjectiveValue::cut(vec![1.0, d2max, d2max * d1max, -lim3], 0.0);
        }
        ObjectiveValue::value(f, vec![-1.0 + s[1], -1.0 + s[2], -1.0 + s[3], r + s[4]])
    }
}

/// Sample-average dual objective at `point` (layout per form). At `λ = 0`
/// the perspective convention applies: the value is `−Σθ` when every
/// argument is non-positive and `+inf` otherwise.
pub fn dual_objective(problem: &RobustProblem, data: &SampleSet, point: &[f64]) -> ObjectiveValue {
    let dim = problem.form.dim();
    assert_eq!(point.len(), dim, "point has the wrong dimension for the {} form", problem.form.name());
    if matches!(problem.form, Form::Ball | Form::Globalized) && point[dim - 1] <= 0.0 {
        return boundary_objective(problem, data, point);
    }
    Evaluator::new(problem, data, 0.0).eval(point)
}

fn boundary_objective(problem: &RobustProblem, data: &SampleSet, point: &[f64]) -> ObjectiveValue {
    let dim = point.len();
    let theta_sum: f64 = point[..dim - 1].iter().sum();
    let inner = |x: f64| -> f64 {
        match problem.form {
            Form::Ball => problem.phi1.conjugate(point[1] - x) + point[0],
            _ => problem.phi2.conjugate(problem.phi1.conjugate(point[2] - x) + point[1]) + point[0],
        }
    };
    let ok = data.values.iter().zip(&data.weights).all(|(x, w)| *w == 0.0 || inner(*x) <= 0.0);
    let mut g = vec![-1.0; dim];
    g[dim - 1] = f64::NAN;
    ObjectiveValue { value: if ok { -theta_sum } else { f64::INFINITY }, subgradient: g, cut: None }
}

/// `φ(t)` helper returning `None` when infinite.
pub(crate) fn finite_phi(d: &Divergence, t: f64) -> Option<f64> {
    let v = d.phi(t);
    v.is_finite().then_some(v)
}
