//! Deep-cut ellipsoid method for small convex problems with extended-real
//! objectives.

/// Oracle answer at a query point.
pub(crate) enum Step {
    /// Finite objective value with a subgradient.
    Value { f: f64, grad: Vec<f64> },
    /// The point is infeasible: every feasible `y` satisfies
    /// `grad·(y − x) ≤ −violation`.
    Cut { grad: Vec<f64>, violation: f64 },
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// Certified lower bound on the minimum over the initial ellipsoid.
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Outcome {
    pub fn found(&self) -> bool {
        self.f.is_finite()
    }

    pub fn gap(&self) -> f64 {
        (self.f - self.lower).max(0.0)
    }
}

pub(crate) struct Settings {
    pub tol: f64,
    pub max_iter: usize,
}

/// Minimise starting from the ellipsoid circumscribing the axis-aligned box
/// `center ± half`. `stop(f_best, lower)` allows early exit.
pub(crate) fn minimize(
    center: &[f64],
    half: &[f64],
    settings: &Settings,
    mut oracle: impl FnMut(&[f64]) -> Step,
    stop: impl Fn(f64, f64) -> bool,
) -> Outcome {
    let n = center.len();
    debug_assert!(n >= 2, "the update formulas need n ≥ 2");
    let nf = n as f64;
    let mut x = center.to_vec();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = nf * half[i].max(1e-12).powi(2);
    }
    let mut best = Outcome { x: x.clone(), f: f64::INFINITY, lower: f64::NEG_INFINITY, iterations: 0, converged: false };
    let mut pg = vec![0.0; n];
    for it in 0..settings.max_iter {
        best.iterations = it + 1;
        let (g, depth) = match oracle(&x) {
            Step::Value { f, grad } => {
                if f < best.f {
                    best.f = f;
                    best.x.clone_from(&x);
                }
                let (grad, m) = normalized(grad);
                mat_vec(&p, &grad, &mut pg);
                let q = dot(&grad, &pg);
                if !(q > 0.0) || !q.is_finite() || m == 0.0 {
                    if q == 0.0 || m == 0.0 {
                        // Zero subgradient: x minimises.
                        best.lower = best.lower.max(f);
                        best.converged = true;
                    }
                    break;
                }
                best.lower = best.lower.max(f - m * q.sqrt());
                if best.f - best.lower <= settings.tol * best.f.abs().max(1.0) {
                    best.converged = true;
                    break;
                }
                if stop(best.f, best.lower) {
                    break;
                }
                (grad, (f - best.f) / m)
            }
            Step::Cut { grad, violation } => {
                let (grad, m) = normalized(grad);
                if m == 0.0 {
                    break;
                }
                (grad, violation.max(0.0) / m)
            }
        };
        mat_vec(&p, &g, &mut pg);
        let q = dot(&g, &pg);
        if !(q > 0.0) || !q.is_finite() {
            break;
        }
        let sq = q.sqrt();
        let alpha = depth / sq;
        if alpha >= 1.0 {
            // Nothing of the current ellipsoid survives the cut.
            if best.f.is_finite() {
                best.lower = best.lower.max(best.f);
                best.converged = true;
            }
            break;
        }
        let b: Vec<f64> = pg.iter().map(|v| v / sq).collect();
        let step = (1.0 + nf * alpha) / (nf + 1.0);
        for i in 0..n {
            x[i] -= step * b[i];
        }
        let scale = nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0);
        let beta = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        for i in 0..n {
            for j in i..n {
                let v = scale * (p[i * n + j] - beta * b[i] * b[j]);
                p[i * n + j] = v;
                p[j * n + i] = v;
            }
        }
        if (0..n).any(|i| !(p[i * n + i] > 0.0)) {
            break;
        }
    }
    best
}

/// Scale `g` to unit max-norm so `gᵀPg` cannot overflow; returns the factor.
/// Cuts are invariant once the depth is divided by the same factor.
fn normalized(mut g: Vec<f64>) -> (Vec<f64>, f64) {
    let m = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 && m.is_finite() {
        g.iter_mut().for_each(|v| *v /= m);
    }
    (g, m)
}

fn mat_vec(p: &[f64], g: &[f64], out: &mut [f64]) {
    let n = g.len();
    for i in 0..n {
        out[i] = (0..n).map(|j| p[i * n + j] * g[j]).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let out = minimize(
            &[0.0, 0.0],
            &[10.0, 10.0],
            &Settings { tol: 1e-10, max_iter: 10_000 },
            |x| Step::Value {
                f: (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 3.0).powi(2),
                grad: vec![2.0 * (x[0] - 1.0), 4.0 * (x[1] + 3.0)],
            },
            |_, _| false,
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] + 3.0).abs() < 1e-4);
        assert!(out.gap() < 1e-9);
    }

    #[test]
    fn respects_cuts() {
        // min x + y subject to x ≥ 1, y ≥ 2 (kinked optimum on the boundary).
        let out = minimize(
            &[0.0, 0.0, 0.0],
            &[10.0, 10.0, 10.0],
            &Settings { tol: 1e-9, max_iter: 20_000 },
            |x| {
                if x[0] < 1.0 {
                    Step::Cut { grad: vec![-1.0, 0.0, 0.0], violation: 1.0 - x[0] }
                } else if x[1] < 2.0 {
                    Step::Cut { grad: vec![0.0, -1.0, 0.0], violation: 2.0 - x[1] }
                } else {
                    Step::Value { f: x[0] + x[1] + x[2].abs(), grad: vec![1.0, 1.0, x[2].signum()] }
                }
            },
            |_, _| false,
        );
        assert!((out.f - 3.0).abs() < 1e-7, "{}", out.f);
        assert!(out.lower <= out.f);
    }
}
