use robust_risk::divergences::Divergence;
use robust_risk::dual::{
    brute_force_primal, compactness_bounds, dual_objective, primal_value, solve, Branch, RobustProblem, SolverOptions,
};
use robust_risk::nominal::{sample, NominalModel, SampleSet};
use robust_risk::risk::{empirical_cvar, nominal_oce, nominal_shortfall, RiskSpec};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn atoms3() -> SampleSet {
    SampleSet::weighted(vec![-1.5, 0.2, 1.0], vec![0.2, 0.5, 0.3]).unwrap()
}

/// KL/KL penalty in closed form after eliminating θ1:
/// `min_θ2 −θ2 + log E[exp(e^{θ2 − X} − 1)]`, by a fine grid then golden refinement.
fn kl_kl_penalty_oracle(data: &SampleSet) -> f64 {
    let f = |t: f64| {
        let m: f64 = data.values.iter().zip(&data.weights).map(|(x, w)| w * ((t - x).exp() - 1.0).exp()).sum();
        -t + m.ln()
    };
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for k in 0..=4000 {
        let t = -5.0 + 10.0 * k as f64 / 4000.0;
        let v = f(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = (best_t - 0.01, best_t + 0.01);
    for _ in 0..100 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

#[test]
fn penalty_kl_kl_matches_closed_form() {
    let data = atoms3();
    let p = RobustProblem::penalty(Divergence::kl(), Divergence::kl());
    let sol = solve(&p, &data, &opts()).unwrap();
    let want = kl_kl_penalty_oracle(&data);
    assert!((sol.value - want).abs() < 1e-6, "{} vs {}", sol.value, want);
}

#[test]
fn penalty_kl_kl_matches_brute_force() {
    let data = atoms3();
    let p = RobustProblem::penalty(Divergence::kl(), Divergence::kl());
    let sol = solve(&p, &data, &opts()).unwrap();
    let brute = brute_force_primal(&p, &data.values, &data.weights).unwrap();
    assert!((sol.value - brute).abs() < 1e-4, "{} vs {}", sol.value, brute);
}

#[test]
fn penalty_worst_case_is_exponential_tilt() {
    let data = atoms3();
    let p = RobustProblem::penalty(Divergence::kl(), Divergence::kl());
    let sol = solve(&p, &data, &opts()).unwrap();
    let (g, gbar) = sol.worst_case.clone().expect("certificate");
    let t2 = sol.theta[1];
    let raw: Vec<f64> = data.values.iter().zip(&data.weights).map(|(x, w)| w * ((t2 - x).exp() - 1.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    for (gi, ri) in g.iter().zip(&raw) {
        assert!((gi - ri / total).abs() < 1e-6);
    }
    let primal = primal_value(&p, &data, &g, &gbar);
    assert!((primal - sol.value).abs() < 1e-4, "{primal} vs {}", sol.value);
}

#[test]
fn ball_zero_radius_is_empirical_cvar() {
    let model = NominalModel::pareto_neg(2.0, 1.0).unwrap();
    let data = sample(&model, 1000, 7).unwrap();
    let p = RobustProblem::ball(Divergence::cvar_indicator(0.975).unwrap(), Divergence::polynomial(3.0).unwrap(), 0.0);
    let sol = solve(&p, &data, &opts()).unwrap();
    let want = empirical_cvar(0.975, &data).unwrap();
    assert!((sol.value - want).abs() < 1e-5, "{} vs {}", sol.value, want);
    assert_eq!(sol.branch, Branch::Nominal);
    let (g, _) = sol.worst_case.expect("nominal worst case");
    for (gi, wi) in g.iter().zip(&data.weights) {
        assert!((gi - wi).abs() < 1e-6);
    }
}

#[test]
fn ball_kl_kl_matches_brute_force() {
    let data = atoms3();
    let p = RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.1);
    let sol = solve(&p, &data, &opts()).unwrap();
    let brute = brute_force_primal(&p, &data.values, &data.weights).unwrap();
    assert!((sol.value - brute).abs() < 1e-4, "{} vs {}", sol.value, brute);
    let (g, gbar) = sol.worst_case.clone().expect("certificate");
    let primal = primal_value(&p, &data, &g, &gbar);
    assert!((primal - sol.value).abs() < 1e-4, "{primal} vs {}", sol.value);
    assert!(Divergence::kl().discrete_value(&g, &data.weights) <= 0.1 + 1e-4);
}

#[test]
fn ball_value_grows_with_radius() {
    let model = NominalModel::pareto_neg(2.0, 1.0).unwrap();
    let data = sample(&model, 1000, 3).unwrap();
    let phi1 = Divergence::cvar_indicator(0.975).unwrap();
    let phi2 = Divergence::polynomial(3.0).unwrap();
    let mut last = f64::NEG_INFINITY;
    for r in [0.0, 0.001, 0.003, 0.005, 0.007, 0.01, 0.03, 0.1] {
        let sol = solve(&RobustProblem::ball(phi1.clone(), phi2.clone(), r), &data, &opts()).unwrap();
        assert!(sol.value > last, "r = {r}: {} after {last}", sol.value);
        last = sol.value;
    }
}

#[test]
fn kl_ball_more_conservative_than_polynomial() {
    let model = NominalModel::pareto_neg(2.0, 1.0).unwrap();
    let data = sample(&model, 1000, 11).unwrap();
    let phi1 = Divergence::cvar_indicator(0.975).unwrap();
    let kl = solve(&RobustProblem::ball(phi1.clone(), Divergence::kl(), 0.02), &data, &opts()).unwrap();
    let poly = solve(&RobustProblem::ball(phi1, Divergence::polynomial(3.0).unwrap(), 0.02), &data, &opts()).unwrap();
    assert!(kl.value > poly.value, "{} vs {}", kl.value, poly.value);
}

#[test]
fn constant_payoff_gives_minus_constant() {
    let data = SampleSet::uniform(vec![0.7; 4]).unwrap();
    for p in [
        RobustProblem::penalty(Divergence::kl(), Divergence::kl()),
        RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.3),
        RobustProblem::ball(Divergence::cvar_indicator(0.9).unwrap(), Divergence::chi2(), 0.3),
    ] {
        let sol = solve(&p, &data, &opts()).unwrap();
        assert!((sol.value + 0.7).abs() < 1e-5, "{:?}: {}", p.form, sol.value);
        let brute = brute_force_primal(&p, &[0.7, 0.7], &[0.5, 0.5]).unwrap();
        assert!((brute + 0.7).abs() < 1e-6);
    }
}

#[test]
fn penalty_objective_at_origin() {
    let data = atoms3();
    let (phi1, phi2) = (Divergence::kl(), Divergence::polynomial(2.0).unwrap());
    let p = RobustProblem::penalty(phi1.clone(), phi2.clone());
    let v = dual_objective(&p, &data, &[0.0, 0.0]);
    let want: f64 = data.values.iter().zip(&data.weights).map(|(x, w)| w * phi2.conjugate(phi1.conjugate(-x))).sum();
    assert!((v.value - want).abs() < 1e-12);
}

#[test]
fn ball_boundary_convention() {
    let data = atoms3();
    let p = RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.5);
    // θ2 below min X keeps every φ1*(θ2 − X_i) + θ1 ≤ 0 for θ1 = 0.
    let v = dual_objective(&p, &data, &[0.0, -3.0, 0.0]);
    assert_eq!(v.value, 3.0);
    let v = dual_objective(&p, &data, &[5.0, 0.0, 0.0]);
    assert_eq!(v.value, f64::INFINITY);
}

#[test]
fn subgradient_matches_finite_differences() {
    let data = atoms3();
    let problems = [
        (RobustProblem::penalty(Divergence::kl(), Divergence::kl()), vec![0.1, -0.2]),
        (RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.2), vec![0.1, -0.2, 1.3]),
        (
            RobustProblem::globalized(Divergence::kl(), Divergence::kl(), Divergence::chi2(), 0.2),
            vec![0.05, -0.5, -2.0, 2.0],
        ),
    ];
    for (p, x) in problems {
        let v = dual_objective(&p, &data, &x);
        for j in 0..x.len() {
            let h = 1e-6;
            let (mut a, mut b) = (x.clone(), x.clone());
            a[j] += h;
            b[j] -= h;
            let fd = (dual_objective(&p, &data, &a).value - dual_objective(&p, &data, &b).value) / (2.0 * h);
            assert!((fd - v.subgradient[j]).abs() < 1e-4, "{:?} coord {j}: {fd} vs {}", p.form, v.subgradient[j]);
        }
    }
}

#[test]
fn compactness_box_contains_optimum() {
    let data = atoms3();
    for p in [
        RobustProblem::penalty(Divergence::kl(), Divergence::kl()),
        RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.2),
    ] {
        let bx = compactness_bounds(&p, &data, &opts()).unwrap();
        assert!(!bx.fallback);
        let sol = solve(&p, &data, &opts()).unwrap();
        assert!(bx.contains(&sol.point()), "{:?} not in {:?}", sol.point(), bx);
    }
    let zero = SampleSet::uniform(vec![0.0; 3]).unwrap();
    let p = RobustProblem::penalty(Divergence::kl(), Divergence::kl());
    assert!(compactness_bounds(&p, &zero, &opts()).unwrap().contains(&[0.0, 0.0]));
}

#[test]
fn lambda_max_shrinks_with_radius() {
    let data = atoms3();
    let small = compactness_bounds(&RobustProblem::ball(Divergence::kl(), Divergence::kl(), 1.0), &data, &opts()).unwrap();
    let large = compactness_bounds(&RobustProblem::ball(Divergence::kl(), Divergence::kl(), 1e3), &data, &opts()).unwrap();
    assert!(large.lambda_max.unwrap() < 1e-2 * small.lambda_max.unwrap());
}

#[test]
fn globalized_zero_radius_is_penalty() {
    let data = atoms3();
    let pen = solve(&RobustProblem::penalty(Divergence::kl(), Divergence::kl()), &data, &opts()).unwrap();
    let glob = RobustProblem::globalized(Divergence::kl(), Divergence::kl(), Divergence::chi2(), 0.0);
    let g = solve(&glob, &data, &opts()).unwrap();
    assert!((g.value - pen.value).abs() < 1e-9);
    let g = solve(&RobustProblem::globalized(Divergence::kl(), Divergence::kl(), Divergence::chi2(), 0.1), &data, &opts())
        .unwrap();
    assert!(g.value >= pen.value - 1e-7);
}

#[test]
fn globalized_matches_brute_force() {
    let data = SampleSet::weighted(vec![-1.0, 0.5], vec![0.4, 0.6]).unwrap();
    let p = RobustProblem::globalized(Divergence::kl(), Divergence::kl(), Divergence::kl(), 0.05);
    let sol = solve(&p, &data, &opts()).unwrap();
    let brute = brute_force_primal(&p, &data.values, &data.weights).unwrap();
    assert!((sol.value - brute).abs() < 1e-3, "{} vs {}", sol.value, brute);
}

#[test]
fn shortfall_dominates_oce() {
    let data = atoms3();
    let (phi1, phi2) = (Divergence::kl(), Divergence::kl());
    let oce = solve(&RobustProblem::penalty(phi1.clone(), phi2.clone()), &data, &opts()).unwrap();
    let sf = solve(&RobustProblem::shortfall_penalty(phi1.clone(), phi2.clone()), &data, &opts()).unwrap();
    assert!(sf.value >= oce.value - 1e-7, "{} < {}", sf.value, oce.value);
    let brute = brute_force_primal(&RobustProblem::shortfall_penalty(phi1.clone(), phi2.clone()), &data.values, &data.weights)
        .unwrap();
    assert!((sf.value - brute).abs() < 1e-4, "{} vs {}", sf.value, brute);

    let oce = solve(&RobustProblem::ball(phi1.clone(), phi2.clone(), 0.1), &data, &opts()).unwrap();
    let sfb = RobustProblem::shortfall_ball(phi1.clone(), phi2.clone(), 0.1);
    let sf = solve(&sfb, &data, &opts()).unwrap();
    assert!(sf.value >= oce.value - 1e-7, "{} < {}", sf.value, oce.value);
    let brute = brute_force_primal(&sfb, &data.values, &data.weights).unwrap();
    assert!((sf.value - brute).abs() < 1e-4, "{} vs {}", sf.value, brute);
}

#[test]
fn shortfall_ball_zero_radius_is_nominal() {
    let data = atoms3();
    let sf = solve(&RobustProblem::shortfall_ball(Divergence::kl(), Divergence::kl(), 0.0), &data, &opts()).unwrap();
    let want = nominal_shortfall(&RiskSpec::oce(Divergence::kl()), &data).unwrap();
    assert_eq!(sf.value, want);
}

#[test]
fn robust_eu_matches_brute_force() {
    let data = atoms3();
    let p = RobustProblem::robust_eu(Divergence::kl(), Divergence::kl());
    let sol = solve(&p, &data, &opts()).unwrap();
    let brute = brute_force_primal(&p, &data.values, &data.weights).unwrap();
    assert!((sol.value - brute).abs() < 1e-4, "{} vs {}", sol.value, brute);
}

#[test]
fn ball_dominates_nominal() {
    let model = NominalModel::gaussian(0.0, 1.0).unwrap();
    let data = sample(&model, 500, 5).unwrap();
    let nominal = nominal_oce(&RiskSpec::entropic(1.0).unwrap(), &data).unwrap();
    let p = RobustProblem::ball(Divergence::kl(), Divergence::kl(), 0.05);
    let sol = solve(&p, &data, &opts()).unwrap();
    assert!(sol.value >= nominal - 1e-7);
}

#[test]
fn bounded_conjugate_domains_are_handled() {
    let data = atoms3();
    for phi2 in [Divergence::chi2(), Divergence::burg(), Divergence::total_variation()] {
        let p = RobustProblem::ball(Divergence::cvar_indicator(0.8).unwrap(), phi2.clone(), 0.1);
        let sol = solve(&p, &data, &opts()).unwrap();
        let brute = brute_force_primal(&p, &data.values, &data.weights).unwrap();
        assert!(brute <= sol.value + 1e-4, "{}: brute {brute} above dual {}", phi2.id(), sol.value);
    }
}
