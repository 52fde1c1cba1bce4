use robust_risk::nominal::NominalModel;
use robust_risk::risk::{exact_oce, RiskSpec};

#[test]
fn exact_cvar_of_pareto_matches_closed_form() {
    // Losses with P(L > l) = l^{-2}: VaR = (1 − α)^{-1/2} and CVaR = 2 VaR.
    let model = NominalModel::pareto_neg(2.0, 1.0).unwrap();
    for alpha in [0.5, 0.9, 0.975, 0.99, 0.999] {
        let v = exact_oce(&RiskSpec::cvar(alpha).unwrap(), &model).unwrap();
        let want = 2.0 / (1.0 - alpha).sqrt();
        assert!((v - want).abs() < 1e-6 * want, "alpha {alpha}: {v} vs {want}");
    }
    let v = exact_oce(&RiskSpec::cvar(0.975).unwrap(), &model).unwrap();
    assert!((v - 12.649).abs() < 0.01);
}

#[test]
fn exact_entropic_of_gaussian_matches_closed_form() {
    for (mu, sigma, gamma) in [(0.0, 1.0, 1.0), (0.5, 2.0, 0.3), (-1.0, 0.5, 2.0)] {
        let model = NominalModel::gaussian(mu, sigma).unwrap();
        let v = exact_oce(&RiskSpec::entropic(gamma).unwrap(), &model).unwrap();
        let want = -mu + gamma * sigma * sigma / 2.0;
        assert!((v - want).abs() < 1e-7, "{v} vs {want}");
    }
}

#[test]
fn exact_cvar_of_exponential_payoff() {
    // Payoff Exp(1): the worst 5% are the payoffs below q = −ln 0.95, so
    // CVaR = −E[X | X ≤ q] = −(1 − e^{-q}(1 + q)) / (1 − e^{-q}).
    let model = NominalModel::exponential(1.0).unwrap();
    let v = exact_oce(&RiskSpec::cvar(0.95).unwrap(), &model).unwrap();
    let q = -(0.95f64).ln();
    let want = -(1.0 - (-q).exp() * (1.0 + q)) / (1.0 - (-q).exp());
    assert!((v - want).abs() < 1e-8, "{v} vs {want}");
}
