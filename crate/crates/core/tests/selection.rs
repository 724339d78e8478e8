use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smi_core::closed_form::*;
use smi_core::models::{BiasedNormalModel, RegressionModel};
use smi_core::sampler::McmcConfig;
use smi_core::selection::*;
use smi_core::{InfluenceSetting, KernelSpec, SmiError};

fn curve(deltas: &[f64], values: Vec<f64>) -> UtilityCurve<f64> {
    let grid = delta_grid(deltas, KernelSpec::Gaussian(1.0)).unwrap();
    let n = grid.len();
    UtilityCurve::new(MetaFamily::Delta, Goal::Maximize, grid, values, vec![0.0; n]).unwrap()
}

fn eta_curve(etas: &[f64], values: Vec<f64>) -> UtilityCurve<f64> {
    let grid = eta_grid(etas).unwrap();
    let n = grid.len();
    UtilityCurve::new(MetaFamily::Eta, Goal::Maximize, grid, values, vec![0.0; n]).unwrap()
}

fn biased_case(seed: u64) -> BiasedDataConfig<f64> {
    let cfg = BiasedDataConfig::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ys, zs) = BiasedNormalModel::simulate(&cfg, &mut rng);
    cfg.with_data(&ys, &zs)
}

/// Predictive `(Y_new, Z_new)` under a joint normal posterior on `(φ, θ)`,
/// scored against the truth. Built from the joint precision matrix rather
/// than the library's SMI formulas.
fn standalone_elpd(cfg: &BiasedDataConfig<f64>, cut: bool) -> f64 {
    let (n, m) = (cfg.n as f64, cfg.m as f64);
    let (sy2, sz2, st2) = (cfg.sigma_y.powi(2), cfg.sigma_z.powi(2), cfg.sigma_theta.powi(2));
    let (mean, cov) = if cut {
        let rho = st2 / (st2 + sy2 / n);
        let vphi = sz2 / m;
        let mphi = cfg.z_bar;
        (
            [mphi, rho * (cfg.y_bar - mphi)],
            [[vphi, -rho * vphi], [-rho * vphi, rho * sy2 / n + rho * rho * vphi]],
        )
    } else {
        let p = [[n / sy2 + m / sz2, n / sy2], [n / sy2, n / sy2 + 1.0 / st2]];
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        let c = [[p[1][1] / det, -p[0][1] / det], [-p[1][0] / det, p[0][0] / det]];
        let b = [n * cfg.y_bar / sy2 + m * cfg.z_bar / sz2, n * cfg.y_bar / sy2];
        ([c[0][0] * b[0] + c[0][1] * b[1], c[1][0] * b[0] + c[1][1] * b[1]], c)
    };
    // (Y, Z) = (φ + θ, φ) + noise
    let pm = [mean[0] + mean[1], mean[0]];
    let pc = [
        [cov[0][0] + 2.0 * cov[0][1] + cov[1][1] + sy2, cov[0][0] + cov[0][1]],
        [cov[0][0] + cov[0][1], cov[0][0] + sz2],
    ];
    let tm = [cfg.phi_true + cfg.theta_true, cfg.phi_true];
    let det = pc[0][0] * pc[1][1] - pc[0][1] * pc[1][0];
    let inv = [[pc[1][1] / det, -pc[0][1] / det], [-pc[1][0] / det, pc[0][0] / det]];
    let d = [tm[0] - pm[0], tm[1] - pm[1]];
    let tc = [sy2, sz2];
    let trace = inv[0][0] * tc[0] + inv[1][1] * tc[1];
    let quad = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * (trace + quad)
}

#[test]
fn single_point_grid_is_its_own_optimum() {
    let c = curve(&[3.0], vec![-1.0]);
    assert_eq!(c.best, 0);
    assert_eq!(c.bracket(), (3.0, 3.0));
}

#[test]
fn optimum_is_shift_invariant() {
    let values = vec![-3.0, -1.5, -1.2, -2.0, -4.0];
    let d = [0.0, 1.0, 2.0, 4.0, 8.0];
    let a = curve(&d, values.clone());
    let b = curve(&d, values.iter().map(|v| v + 123.25).collect());
    assert_eq!(a.best, 2);
    assert_eq!(a.best, b.best);
    assert_eq!(a.bracket(), (1.0, 4.0));
    let mut m = a.clone();
    m.goal = Goal::Minimize;
    let m = UtilityCurve::new(MetaFamily::Delta, Goal::Minimize, m.grid, m.values, m.std_errors).unwrap();
    assert_eq!(m.best, 4);
}

#[test]
fn grid_must_increase() {
    let grid = delta_grid(&[1.0, 0.5], KernelSpec::Gaussian(1.0)).unwrap();
    assert!(UtilityCurve::new(MetaFamily::Delta, Goal::Maximize, grid, vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    let grid = delta_grid(&[1.0, 2.0], KernelSpec::Gaussian(1.0)).unwrap();
    assert!(UtilityCurve::new(MetaFamily::Eta, Goal::Maximize, grid, vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
}

#[test]
fn curve_csv_schema() {
    let c = curve(&[0.0, 1.0, f64::INFINITY], vec![-1.0, -0.5, -2.0]);
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "meta_param,utility,se\n0,-1,0\n1,-0.5,0\ninf,-2,0\n");
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["best"], 1);
    assert_eq!(json["family"], "delta");
}

#[test]
fn exact_curve_endpoints_match_standalone_predictives() {
    for seed in 0..10 {
        let cfg = biased_case(seed);
        let deltas = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY];
        let c = exact_elpd_curve(&cfg, &deltas, PredictiveForm::Exact).unwrap();
        assert!((c.values[0] - standalone_elpd(&cfg, false)).abs() < 1e-10, "seed {seed}");
        assert!((c.values[6] - standalone_elpd(&cfg, true)).abs() < 1e-10, "seed {seed}");
        assert!(c.best_value() >= c.values[0].max(c.values[6]));
    }
}

#[test]
fn loocv_closed_form_matches_refit() {
    let cfg = RegressionConfig::standard(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (xs, ys, zs) = RegressionModel::simulate(&cfg, (0.0, 2.0), &mut rng);
    let fitted = cfg.with_data(&xs, &ys, &zs).unwrap();
    for delta in [Bandwidth::zero(), Bandwidth::Finite(0.7), Bandwidth::Infinite] {
        let est = loocv_elpd_z_closed_form(&fitted, &zs, delta).unwrap();
        for (j, &zj) in zs.iter().enumerate() {
            let rest: Vec<f64> = zs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &z)| z).collect();
            let refit = cfg.with_data(&xs, &ys, &rest).unwrap();
            let direct = regression_z_predictive(&refit, delta).unwrap().log_pdf(zj);
            assert!((est.pointwise[j] - direct).abs() < 1e-10);
        }
        let sd = {
            let m = est.pointwise.len() as f64;
            let v: f64 = est.pointwise.iter().map(|p| (p - est.value).powi(2)).sum::<f64>() / (m - 1.0);
            v.sqrt() / m.sqrt()
        };
        assert!((est.se - sd).abs() < 1e-14);
    }
}

#[test]
fn loocv_with_identical_z() {
    let cfg = RegressionConfig::standard(1.0);
    let xs = [0.1, 0.5, 1.0, 1.5, 2.0];
    let ys = [0.2, 0.4, 1.1, 1.4, 2.1];
    let zs = [0.3_f64; 6];
    let fitted = cfg.with_data(&xs, &ys, &zs).unwrap();
    let est = loocv_elpd_z_closed_form(&fitted, &zs, Bandwidth::Finite(1.0)).unwrap();
    let common = regression_z_predictive(&cfg.with_data(&xs, &ys, &zs[..5]).unwrap(), Bandwidth::Finite(1.0))
        .unwrap()
        .log_pdf(0.3);
    assert!((est.value - common).abs() < 1e-12);
    assert!(est.se.abs() < 1e-12);
}

#[test]
fn loocv_needs_two_observations() {
    assert_eq!(
        loocv_from_pointwise(vec![1.0]).unwrap_err(),
        SmiError::TooFewObservations { min: 2, got: 1 }
    );
    let cfg = RegressionConfig::standard(1.0);
    assert!(loocv_elpd_z_closed_form(&cfg, &[0.1], Bandwidth::zero()).is_err());
}

#[test]
fn waic_of_constant_loglik() {
    let ll = vec![vec![-1.5_f64, -0.5, -2.0]; 10];
    let w = waic_elpd(&ll).unwrap();
    assert!((w.elpd + 4.0).abs() < 1e-12);
    assert_eq!(w.p_waic, 0.0);
    assert!(waic_elpd(&ll[..1]).is_err());
}

#[test]
fn waic_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ll: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..7).map(|_| -1.0 - rand::Rng::random::<f64>(&mut rng)).collect())
        .collect();
    let perm = [3, 0, 6, 1, 5, 2, 4];
    let shuffled: Vec<Vec<f64>> = ll.iter().map(|r| perm.iter().map(|&i| r[i]).collect()).collect();
    let (a, b) = (waic_elpd(&ll).unwrap(), waic_elpd(&shuffled).unwrap());
    assert!((a.elpd - b.elpd).abs() < 1e-12);
    assert!((a.se - b.se).abs() < 1e-12);
}

#[test]
fn waic_agrees_with_loocv_on_conjugate_draws() {
    let cfg = RegressionConfig::standard(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (xs, ys, zs) = RegressionModel::simulate(&cfg, (0.0, 2.0), &mut rng);
    let fitted = cfg.with_data(&xs, &ys, &zs).unwrap();
    let delta = Bandwidth::Finite(0.5);
    let post = regression_smi_posterior(&fitted, delta).unwrap();
    let sz = cfg.sigma_z;
    let ll: Vec<Vec<f64>> = (0..20000)
        .map(|_| {
            let (phi, _) = post.sample(&mut rng);
            zs.iter().map(|&z| NormalParams { mean: phi, variance: sz * sz }.log_pdf(z)).collect()
        })
        .collect();
    let w = waic_elpd(&ll).unwrap();
    let loo = loocv_elpd_z_closed_form(&fitted, &zs, delta).unwrap();
    let m = zs.len() as f64;
    let combined = w.se / m + loo.se;
    assert!((w.elpd / m - loo.value).abs() < combined, "{} vs {}", w.elpd / m, loo.value);
}

#[test]
fn loocv_by_refitting_chains_matches_closed_form() {
    let cfg = RegressionConfig {
        n: 20,
        m: 8,
        ..RegressionConfig::<f64>::standard(1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (xs, ys, zs) = RegressionModel::simulate(&cfg, (0.0, 2.0), &mut rng);
    let fitted = cfg.with_data(&xs, &ys, &zs).unwrap();
    let model = RegressionModel::from_config(&cfg);
    let obs = RegressionModel::observations(&xs, &ys);
    let mcmc = McmcConfig {
        outer_steps: 40000,
        inner_steps: 5,
        seed: 17,
        ..McmcConfig::default()
    };
    let est = loocv_elpd_z_mcmc(&model, &InfluenceSetting::Cut, &obs, &zs, &mcmc).unwrap();
    let exact = loocv_elpd_z_closed_form(&fitted, &zs, Bandwidth::Infinite).unwrap();
    for (a, b) in est.pointwise.iter().zip(&exact.pointwise) {
        assert!((a - b).abs() < 0.05_f64, "{a} vs {b}");
    }
}

#[test]
fn pmse_identities() {
    assert_eq!(pmse(&[1.5; 10], 1.5).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = NormalParams { mean: 0.3, variance: 0.5 };
    let draws: Vec<f64> = (0..200_000).map(|_| p.sample(&mut rng)).collect();
    let est = pmse(&draws, 0.0).unwrap();
    assert!((est - p.mean_squared_error(0.0)).abs() < 0.01);
    assert!(pmse::<f64>(&[], 0.0).is_err());
}

#[test]
fn identical_curves_align_to_identity() {
    let deltas = [0.0, 1.0, 2.0, 4.0, 8.0];
    let dvals: Vec<f64> = deltas.iter().map(|d| -d).collect();
    let etas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let evals: Vec<f64> = deltas.iter().rev().map(|d| -d).collect();
    let m = eta_to_delta_matching(&curve(&deltas, dvals), &eta_curve(&etas, evals), MapDirection::Decreasing, 10).unwrap();
    assert_eq!(m.delta, vec![8.0, 4.0, 2.0, 1.0, 0.0]);
    assert!(m.residuals.iter().all(|r| *r == 0.0));
    assert!(m.clamped.iter().all(|c| !c));
}

#[test]
fn matching_recovers_the_analytic_map() {
    let cfg = biased_case(21);
    let deltas: Vec<f64> = std::iter::once(0.0).chain((0..=40).map(|i| 10f64.powf(-1.0 + 3.0 * i as f64 / 40.0))).collect();
    let dcurve = exact_elpd_curve(&cfg, &deltas, PredictiveForm::Exact).unwrap();
    let etas = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let evals: Vec<f64> = etas
        .iter()
        .map(|&e| exact_elpd_biased(&cfg, delta_from_eta(cfg.sigma_y, e).unwrap(), PredictiveForm::Exact).unwrap())
        .collect();
    let m = eta_to_delta_matching(&dcurve, &eta_curve(&etas, evals), MapDirection::Decreasing, 20).unwrap();
    for (j, &e) in etas.iter().enumerate() {
        let analytic = delta_from_eta(cfg.sigma_y, e).unwrap().value();
        let i = deltas.iter().position(|&d| d >= analytic).unwrap();
        let (lo, hi) = (deltas[i - 1], deltas[i]);
        assert!(m.delta[j] >= lo * 0.999 && m.delta[j] <= hi * 1.001, "eta {e}: {} vs {analytic}", m.delta[j]);
        assert!(m.residuals[j].abs() < 1e-3);
    }
    assert!(m.delta.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn disjoint_ranges_are_rejected() {
    let d = curve(&[0.0, 1.0], vec![-1.0, -2.0]);
    let e = eta_curve(&[0.5, 1.0], vec![5.0, 6.0]);
    assert!(matches!(
        eta_to_delta_matching(&d, &e, MapDirection::Decreasing, 4),
        Err(SmiError::NonOverlappingRanges { .. })
    ));
}

#[test]
fn clamped_points_are_flagged() {
    let d = curve(&[0.0, 1.0, 2.0], vec![-1.0, -2.0, -3.0]);
    let e = eta_curve(&[0.5, 1.0], vec![-2.5, -0.5]);
    let m = eta_to_delta_matching(&d, &e, MapDirection::Decreasing, 4).unwrap();
    assert_eq!(m.clamped, vec![false, true]);
    assert_eq!(m.delta[1], 0.0);
    assert!((m.residuals[1] - 0.5).abs() < 1e-12);
    assert_eq!(m.delta_at(0.75), Some((m.delta[0] + m.delta[1]) / 2.0));
}
