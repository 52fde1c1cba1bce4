use robust_risk::exec::{with_mode, ExecMode};
use robust_risk::experiments::*;
use robust_risk::nominal::{sample, NominalModel};
use robust_risk::risk::empirical_cvar;
use robust_risk::Error;
use statrs::function::erf::erf;

fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

#[test]
fn bs_delta_at_the_money() {
    // d1 = (0 + (0.01 + 0.045)·1)/0.3
    let d1 = 0.055 / 0.3;
    let want = phi(d1);
    assert!((want - 0.5727).abs() < 1e-4);
    assert!((bs_delta(1.0, 1.0, 0.3, 0.01, 1.0).unwrap() - want).abs() < 1e-12);
}

#[test]
fn bs_delta_limits() {
    assert!(bs_delta(100.0, 1.0, 0.3, 0.01, 1.0).unwrap() > 1.0 - 1e-12);
    assert!(bs_delta(0.9, 1.0, 0.3, 0.01, 1e-10).unwrap() < 1e-12);
    assert_eq!(bs_delta(0.9, 1.0, 0.3, 0.01, 0.0).unwrap(), 0.0);
    assert_eq!(bs_delta(1.1, 1.0, 0.3, 0.01, 0.0).unwrap(), 1.0);
    assert!(matches!(bs_delta(-1.0, 1.0, 0.3, 0.01, 1.0), Err(Error::Domain(_))));
    assert!(matches!(bs_delta(1.0, 1.0, 0.0, 0.01, 1.0), Err(Error::Domain(_))));
}

#[test]
fn bs_price_matches_formula() {
    let (d1, d2) = (0.055 / 0.3, 0.055 / 0.3 - 0.3);
    let want = phi(d1) - (-0.01f64).exp() * phi(d2);
    assert!((bs_price(1.0, 1.0, 0.3, 0.01, 1.0).unwrap() - want).abs() < 1e-12);
}

#[test]
fn self_financing_telescopes_without_costs() {
    let cfg = HedgingConfig { k0: 0.0, k_prop: 0.0, r_f: 0.0, ..HedgingConfig::default() };
    let price = bs_price(cfg.s0, cfg.strike, cfg.sigma_s, 0.0, cfg.maturity).unwrap();
    let z: Vec<f64> = (0..50).map(|i| ((i as f64) * 1.7).sin() * 1.3).collect();
    let o = hedge_portfolio(&cfg, &z).unwrap();
    assert!((o.stock + o.cash - (price + o.gains)).abs() < 1e-10);
}

#[test]
fn frequent_costless_hedging_replicates() {
    let cfg = HedgingConfig { k0: 0.0, k_prop: 0.0, sigma_s: 0.05, paths: 100, ..HedgingConfig::default() };
    let errs = hedge_paths(&cfg, 10_000).unwrap();
    assert!(errs.mean() < 2e-3, "{}", errs.mean());
    assert!(errs.values.iter().all(|e| *e >= 0.0));
}

#[test]
fn hedge_paths_are_reproducible_and_mode_independent() {
    let cfg = HedgingConfig { paths: 300, ..HedgingConfig::default() };
    let a = with_mode(ExecMode::Parallel, || hedge_paths(&cfg, 40).unwrap());
    let b = with_mode(ExecMode::Sequential, || hedge_paths(&cfg, 40).unwrap());
    assert_eq!(a, b);
    let c = hedge_paths(&HedgingConfig { seed: 2, ..cfg }, 40).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn hedging_curves_are_u_shaped_and_robust_dominates() {
    let cfg = HedgingConfig { paths: 2000, ..HedgingConfig::default() };
    let t = hedging_study(&cfg).unwrap();
    let nominal = t.column("nominal_cvar").unwrap();
    let robust = t.column("robust_cvar").unwrap();
    for curve in [&nominal, &robust] {
        let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(curve[0] > min && curve[curve.len() - 1] > min, "{curve:?}");
        // Transaction costs dominate at the top of the grid.
        assert!(curve[curve.len() - 1] > curve[curve.len() - 2]);
    }
    assert!(nominal.iter().zip(&robust).all(|(n, r)| r >= n));
}

#[test]
fn newsvendor_closed_form_defaults() {
    let y = newsvendor_closed_form(&NewsvendorConfig::default()).unwrap();
    assert!((y - 4.20).abs() < 0.01, "{y}");
    // Independent evaluation: 0.6·F⁻¹(0.04) + 0.4·F⁻¹(0.99) for the standard log-normal.
    let n = statrs::distribution::Normal::standard();
    use statrs::distribution::ContinuousCDF;
    let want = 0.6 * n.inverse_cdf(0.04).exp() + 0.4 * n.inverse_cdf(0.99).exp();
    assert!((y - want).abs() < 1e-9);
}

#[test]
fn newsvendor_closed_form_edge_cases() {
    let det = NewsvendorConfig { demand: NominalModel::empirical(vec![3.0], vec![1.0]).unwrap(), ..NewsvendorConfig::default() };
    assert_eq!(newsvendor_closed_form(&det).unwrap(), 3.0);
    let degenerate = NewsvendorConfig { alpha: 1.0, l: 0.0, ..NewsvendorConfig::default() };
    assert!(matches!(newsvendor_closed_form(&degenerate), Err(Error::Domain(_))));
}

#[test]
fn profit_is_two_linear_pieces_in_demand() {
    let cfg = NewsvendorConfig::default();
    let y = 5.0;
    assert_eq!(profit(&cfg, y, y), (cfg.v - cfg.c) * y);
    let h = 0.25;
    // Below y each unit of demand adds v − s; above y it costs l.
    assert!(((profit(&cfg, y, y - h) - profit(&cfg, y, y - 2.0 * h)) / h - (cfg.v - cfg.s)).abs() < 1e-12);
    assert!(((profit(&cfg, y, y + 2.0 * h) - profit(&cfg, y, y + h)) / h + cfg.l).abs() < 1e-12);
    for d in [0.0, 1.0, 5.0, 9.0] {
        assert!(profit(&cfg, y, d) <= (cfg.v - cfg.c) * y + 1e-12);
    }
}

#[test]
fn robust_newsvendor_orders_more_under_ambiguity() {
    let cfg = NewsvendorConfig { radius_grid: vec![0.0, 0.05, 0.2, 0.5], ..NewsvendorConfig::default() };
    let t = newsvendor_robust_curve(&cfg).unwrap();
    let y = t.column("y_star").unwrap();
    assert!((y[0] - 4.2).abs() < 0.1, "{y:?}");
    assert!(y.windows(2).all(|w| w[1] >= w[0] - 1e-3), "{y:?}");
}

#[test]
fn toy_zero_radius_is_empirical_cvar_and_values_increase() {
    let cfg = ToyConfig::default();
    let t = toy_pareto_cvar(&cfg).unwrap();
    let v = t.column("robust_cvar").unwrap();
    let data = sample(&NominalModel::pareto_neg(2.0, 1.0).unwrap(), cfg.n, cfg.seed).unwrap();
    assert!((v[0] - empirical_cvar(0.975, &data).unwrap()).abs() < 1e-8);
    assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    assert_eq!(t, toy_pareto_cvar(&cfg).unwrap());
}

#[test]
fn kl_is_more_conservative_than_polynomial() {
    let cfg = CompareConfig { sizes: vec![500, 1000, 2000], ..CompareConfig::default() };
    let t = divergence_comparison(&cfg).unwrap();
    let (p, k) = (t.column("polynomial").unwrap(), t.column("kl").unwrap());
    assert!(p.iter().zip(&k).all(|(p, k)| k >= p), "{p:?} {k:?}");
}

#[test]
fn configs_reject_bad_values() {
    assert!(HedgingConfig { sigma_s: 0.0, ..HedgingConfig::default() }.validate().is_err());
    assert!(HedgingConfig { paths: 0, ..HedgingConfig::default() }.validate().is_err());
    assert!(NewsvendorConfig { c: 9.0, ..NewsvendorConfig::default() }.validate().is_err());
    assert!(ToyConfig { radii: vec![-0.1], ..ToyConfig::default() }.validate().is_err());
    assert!(CompareConfig { radius: 0.0, ..CompareConfig::default() }.validate().is_err());
}
