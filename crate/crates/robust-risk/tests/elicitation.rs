use robust_risk::divergences::Divergence;
use robust_risk::elicitation::{ce_recover, default_p_seq, elicit_composite, TargetKind};
use robust_risk::{Error, RiskSpec, RobustProblem};

fn kl_kl() -> RobustProblem {
    RobustProblem::penalty(Divergence::kl(), Divergence::kl())
}

#[test]
fn zero_outcome_gives_zero() {
    let r = elicit_composite(&kl_kl(), 0.0, &default_p_seq()).unwrap();
    assert!(r.estimates.iter().all(|(_, v)| *v == 0.0));
    assert_eq!(r.extrapolated, 0.0);
    let c = ce_recover(&RiskSpec::entropic(1.0).unwrap(), 0.0, &default_p_seq()).unwrap();
    assert_eq!(c.extrapolated, 0.0);
}

#[test]
fn kl_kl_limit_at_minus_one() {
    // exp(exp(1) − 1) − 1
    let target = (1f64.exp() - 1.0).exp() - 1.0;
    let r = elicit_composite(&kl_kl(), -1.0, &default_p_seq()).unwrap();
    assert_eq!(r.target_kind, TargetKind::Composite);
    assert!((r.reference - target).abs() < 1e-12);
    assert!((r.extrapolated - target).abs() < 1e-2, "{} vs {target}", r.extrapolated);
}

#[test]
fn errors_decay_monotonically() {
    for (phi1, x) in [(Divergence::kl(), -1.0), (Divergence::kl(), 1.0), (Divergence::polynomial(2.0).unwrap(), -1.0)] {
        let r = elicit_composite(&RobustProblem::penalty(phi1.clone(), Divergence::kl()), x, &default_p_seq()).unwrap();
        let e = r.errors();
        for w in e.windows(2) {
            assert!(w[1] <= w[0] * 1.0001 + 1e-9, "{} x={x}: {e:?}", phi1.id());
        }
        // At least linear: halving p should roughly halve the error.
        assert!(e[e.len() - 1] <= 0.6 * e[e.len() - 2] + 1e-6, "{} x={x}: {e:?}", phi1.id());
    }
}

#[test]
fn shortfall_penalty_matches_penalty_limit() {
    let p_seq = default_p_seq();
    let a = elicit_composite(&kl_kl(), -1.0, &p_seq).unwrap();
    let b = elicit_composite(&RobustProblem::shortfall_penalty(Divergence::kl(), Divergence::kl()), -1.0, &p_seq).unwrap();
    assert!((a.extrapolated - b.extrapolated).abs() < 1e-2, "{} vs {}", a.extrapolated, b.extrapolated);
}

#[test]
fn shortfall_rejects_cvar() {
    let prob = RobustProblem::shortfall_penalty(Divergence::cvar_indicator(0.9).unwrap(), Divergence::kl());
    assert!(matches!(elicit_composite(&prob, -1.0, &default_p_seq()), Err(Error::Precondition(_))));
}

#[test]
fn bounded_conjugates_are_rejected() {
    let prob = RobustProblem::penalty(Divergence::kl(), Divergence::chi2());
    assert!(matches!(elicit_composite(&prob, -1.0, &default_p_seq()), Err(Error::Precondition(_))));
}

#[test]
fn bad_probability_sequences_are_rejected() {
    assert!(elicit_composite(&kl_kl(), -1.0, &[0.1, 0.2]).is_err());
    assert!(elicit_composite(&kl_kl(), -1.0, &[0.6, 0.1]).is_err());
    assert!(elicit_composite(&kl_kl(), -1.0, &[0.1]).is_err());
}

#[test]
fn cvar_utility_is_recovered() {
    let alpha = 0.9;
    for x in [-2.0, -0.5] {
        let r = ce_recover(&RiskSpec::cvar(alpha).unwrap(), x, &default_p_seq()).unwrap();
        assert_eq!(r.target_kind, TargetKind::Utility);
        assert!((r.extrapolated - x / (1.0 - alpha)).abs() < 1e-3, "{} at x={x}", r.extrapolated);
    }
}

#[test]
fn entropic_utility_is_recovered() {
    let r = ce_recover(&RiskSpec::entropic(1.0).unwrap(), -1.0, &default_p_seq()).unwrap();
    assert!((r.extrapolated - (1.0 - 1f64.exp())).abs() < 1e-3, "{}", r.extrapolated);
}

#[test]
fn degenerate_phi2_is_the_negated_certainty_equivalent() {
    let p_seq = default_p_seq();
    for (phi1, spec) in [(Divergence::kl(), RiskSpec::entropic(1.0).unwrap()), (Divergence::polynomial(2.0).unwrap(), RiskSpec::oce(Divergence::polynomial(2.0).unwrap()))] {
        for x in [-1.0, 0.5] {
            let a = elicit_composite(&RobustProblem::penalty(phi1.clone(), Divergence::degenerate()), x, &p_seq).unwrap();
            let b = ce_recover(&spec, x, &p_seq).unwrap();
            assert!((a.extrapolated + b.extrapolated).abs() < 1e-6, "{} vs {}", a.extrapolated, b.extrapolated);
        }
    }
}
