//! Direct maximisation of the discrete primal on a handful of atoms. It never
//! touches a conjugate, so it serves as an independent check of the duals.
//!
//! Each probability vector (`ḡ`, `g`, and for the globalized form the
//! middle measure) is improved by pairwise mass transfers with exact line
//! searches. Ball constraints enter through a log barrier whose weight is
//! driven to zero. For kinked `φ` the result is a heuristic lower bound.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};

use super::{Form, RobustProblem};
use crate::divergences::Divergence;
use crate::error::{Error, Result};
use crate::nominal::SampleSet;
use crate::optim::bisect_threshold;

const MAX_ATOMS: usize = 6;
const GOLDEN_STEPS: usize = 64;
const FEASIBLE_STEPS: usize = 60;
const MAX_SWEEPS: usize = 400;
const STARTS: usize = 3;

/// `p φ(q/p)` with the conventions for empty `p`.
fn persp(d: &Divergence, q: f64, p: f64) -> f64 {
    if p > 0.0 {
        p * d.phi(q / p)
    } else if q > 0.0 {
        q * d.conj_dom_upper()
    } else {
        0.0
    }
}

type Cost<'a> = Box<dyn Fn(usize, &[f64]) -> f64 + 'a>;

/// A separable concave objective over `layers` probability vectors:
/// `Σ_i term(i, z_·i) + μ log(r − Σ_i cost(i, z_·i))`.
struct Program<'a> {
    layers: usize,
    free: Vec<usize>,
    term: Box<dyn Fn(usize, &[f64]) -> f64 + 'a>,
    cost: Option<(Cost<'a>, f64)>,
}

struct State {
    z: Vec<Vec<f64>>,
}

impl State {
    fn column(&self, i: usize) -> Vec<f64> {
        self.z.iter().map(|layer| layer[i]).collect()
    }
}

impl Program<'_> {
    fn barrier(&self, total_cost: f64, mu: f64) -> f64 {
        match &self.cost {
            Some((_, r)) => {
                let slack = r - total_cost;
                if slack > 0.0 {
                    mu * slack.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => 0.0,
        }
    }

    fn cost_at(&self, i: usize, col: &[f64]) -> f64 {
        self.cost.as_ref().map_or(0.0, |(c, _)| c(i, col))
    }

    fn totals(&self, st: &State, n: usize) -> (f64, f64) {
        (0..n).fold((0.0, 0.0), |(t, c), i| {
            let col = st.column(i);
            (t + (self.term)(i, &col), c + self.cost_at(i, &col))
        })
    }

    /// Coordinate-pair ascent at barrier weight `mu`.
    fn ascend(&self, st: &mut State, n: usize, mu: f64) {
        for _ in 0..MAX_SWEEPS {
            let (_, mut cost) = self.totals(st, n);
            let mut gained = 0.0;
            for &layer in &self.free {
                for i in 0..n {
                    for j in 0..n {
                        if i >= j {
                            continue;
                        }
                        let (ci, cj) = (st.column(i), st.column(j));
                        let base = (self.term)(i, &ci) + (self.term)(j, &cj);
                        let base_cost = self.cost_at(i, &ci) + self.cost_at(j, &cj);
                        let rest = cost - base_cost;
                        let b0 = self.barrier(cost, mu);
                        let gain = |t: f64| -> (f64, f64) {
                            let mut a = ci.clone();
                            let mut b = cj.clone();
                            a[layer] += t;
                            b[layer] -= t;
                            if a[layer] < 0.0 || b[layer] < 0.0 {
                                return (f64::NEG_INFINITY, 0.0);
                            }
                            let c = self.cost_at(i, &a) + self.cost_at(j, &b);
                            let v = (self.term)(i, &a) + (self.term)(j, &b) - base + self.barrier(rest + c, mu) - b0;
                            (if v.is_nan() { f64::NEG_INFINITY } else { v }, c)
                        };
                        let (zi, zj) = (ci[layer], cj[layer]);
                        let mut best = (0.0, 0.0, base_cost);
                        for (lo, hi) in [(-zi, 0.0), (0.0, zj)] {
                            if hi - lo <= 0.0 {
                                continue;
                            }
                            let (t, v, c) = golden_max(&gain, lo, hi);
                            if v > best.1 {
                                best = (t, v, c);
                            }
                        }
                        if best.1 > 0.0 {
                            st.z[layer][i] += best.0;
                            st.z[layer][j] -= best.0;
                            cost = rest + best.2;
                            gained += best.1;
                        }
                    }
                }
            }
            if gained <= 1e-13 {
                break;
            }
        }
    }
}

/// Golden-section maximisation of `f` over a step interval with one end at
/// 0, where `f` is finite. The finite steps form an interval around 0 (the
/// barrier domain is convex), so the far end is first pulled back to it;
/// otherwise both probes can land outside and the search walks away from 0.
fn golden_max(f: &dyn Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> (f64, f64, f64) {
    let far = if lo == 0.0 { hi } else { lo };
    if f(far).0 == f64::NEG_INFINITY {
        let (mut inside, mut outside) = (0.0, far);
        for _ in 0..FEASIBLE_STEPS {
            let mid = 0.5 * (inside + outside);
            if f(mid).0 == f64::NEG_INFINITY {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        if lo == 0.0 {
            hi = inside;
        } else {
            lo = inside;
        }
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1.0 >= f2.0 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut cands = vec![(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))];
    cands.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
    let (t, (v, c)) = cands[0];
    (t, v, c)
}

fn random_simplex(rng: &mut ChaCha20Rng, support: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = support.iter().map(|w| if *w > 0.0 { Exp1.sample(rng) } else { 0.0 }).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Best value of `prog` over several starts.
fn maximise(prog: &Program<'_>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let mus: &[f64] = if prog.cost.is_some() { &[1e-2, 1e-4, 1e-6, 1e-8, 1e-10] } else { &[0.0] };
    let mut best = f64::NEG_INFINITY;
    for start in 0..STARTS {
        let mut st = State { z: vec![w.to_vec(); prog.layers] };
        if start > 0 {
            for &layer in &prog.free {
                let target = random_simplex(&mut rng, w);
                // Blend toward the nominal until the barrier is finite.
                let mut tau = 1.0;
                loop {
                    st.z[layer] = w.iter().zip(&target).map(|(a, b)| (1.0 - tau) * a + tau * b).collect();
                    let (_, c) = prog.totals(&st, n);
                    if prog.barrier(c, 1.0).is_finite() || tau < 1e-9 {
                        break;
                    }
                    tau *= 0.5;
                }
            }
        }
        for &mu in mus {
            prog.ascend(&mut st, n, mu);
        }
        let (value, cost) = prog.totals(&st, n);
        if prog.barrier(cost, 1.0).is_finite() || prog.cost.is_none() {
            best = best.max(value);
        }
    }
    best
}

/// Maximise the discrete primal of `problem` over atoms `values` with
/// nominal probabilities `weights` (at most six atoms).
pub fn brute_force_primal(problem: &RobustProblem, values: &[f64], weights: &[f64]) -> Result<f64> {
    problem.validate()?;
    let data = SampleSet::weighted(values.to_vec(), weights.to_vec())?;
    let n = data.len();
    if n > MAX_ATOMS {
        return Err(Error::Param(format!("brute force is limited to {MAX_ATOMS} atoms, got {n}")));
    }
    let (x, w) = (&data.values, &data.weights);
    let (phi1, phi2) = (&problem.phi1, &problem.phi2);
    let r = problem.radius;
    let value = match problem.form {
        Form::Penalty | Form::Ball => {
            // Layers: 0 = g (middle), 1 = ḡ (inner).
            let penal = problem.form == Form::Penalty;
            let fixed = problem.form == Form::Ball && r == 0.0;
            let term = move |i: usize, c: &[f64]| {
                let pen = if penal { persp(phi2, c[0], w[i]) } else { 0.0 };
                -c[1] * x[i] - persp(phi1, c[1], c[0]) - pen
            };
            let cost = (!penal && !fixed).then(|| {
                (Box::new(move |i: usize, c: &[f64]| persp(phi2, c[0], w[i])) as Cost<'_>, r)
            });
            let prog = Program {
                layers: 2,
                free: if fixed { vec![1] } else { vec![0, 1] },
                term: Box::new(term),
                cost,
            };
            maximise(&prog, w)
        }
        Form::Globalized => {
            // Layers: 0 = outer P, 1 = g, 2 = ḡ.
            let phi3 = problem.phi3();
            let fixed = r == 0.0;
            let term = move |i: usize, c: &[f64]| -c[2] * x[i] - persp(phi1, c[2], c[1]) - persp(phi2, c[1], c[0]);
            let cost = (!fixed).then(|| {
                (Box::new(move |i: usize, c: &[f64]| persp(phi3, c[0], w[i])) as Cost<'_>, r)
            });
            let prog = Program {
                layers: 3,
                free: if fixed { vec![1, 2] } else { vec![0, 1, 2] },
                term: Box::new(term),
                cost,
            };
            maximise(&prog, w)
        }
        Form::RobustEu => {
            let term = move |i: usize, c: &[f64]| c[0] * phi1.conjugate(-x[i]) - persp(phi2, c[0], w[i]);
            maximise(&Program { layers: 1, free: vec![0], term: Box::new(term), cost: None }, w)
        }
        Form::ShortfallPenalty | Form::ShortfallBall => {
            let ball = problem.form == Form::ShortfallBall;
            let worst = |theta2: f64| -> f64 {
                let a: Vec<f64> = x.iter().map(|xi| phi1.conjugate(-theta2 - xi)).collect();
                if ball && r == 0.0 {
                    return a.iter().zip(w.iter()).map(|(ai, wi)| ai * wi).sum();
                }
                let term = |i: usize, c: &[f64]| {
                    let pen = if ball { 0.0 } else { persp(phi2, c[0], w[i]) };
                    c[0] * a[i] - pen
                };
                let cost = ball.then(|| {
                    (Box::new(move |i: usize, c: &[f64]| persp(phi2, c[0], w[i])) as Cost<'_>, r)
                });
                let prog = Program { layers: 1, free: vec![0], term: Box::new(term), cost };
                maximise(&prog, w)
            };
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            bisect_threshold(|t| worst(t) <= 0.0, -data.max() - 1.0, -data.min() + 1.0, 1e-10 * scale, 200, 60)
                .ok_or_else(|| Error::Infeasible("no acceptable capital level found".into()))?
        }
    };
    Ok(value)
}

