mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smi_core::closed_form::*;
use smi_core::models::{BiasedNormalModel, RegressionModel};

fn biased_data(seed: u64) -> (BiasedDataConfig<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = BiasedDataConfig {
        n: rng.random_range(5..80),
        m: rng.random_range(5..60),
        sigma_y: rng.random_range(0.3..2.0),
        sigma_z: rng.random_range(0.5..3.0),
        sigma_theta: rng.random_range(0.1..1.5),
        ..BiasedDataConfig::standard()
    };
    let (ys, zs) = BiasedNormalModel::simulate(&cfg, &mut rng);
    (cfg.with_data(&ys, &zs), ys, zs)
}

fn regression_data(seed: u64) -> (RegressionConfig<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1.0..2.0);
    let cfg = RegressionConfig {
        n: rng.random_range(10..60),
        m: rng.random_range(5..60),
        ..RegressionConfig::standard(k)
    };
    let (xs, ys, zs) = RegressionModel::simulate(&cfg, (0.0, 2.0), &mut rng);
    (cfg.with_data(&xs, &ys, &zs).unwrap(), xs, ys, zs)
}

fn assert_moments(post: &GaussianPosterior<f64>, o: &oracles::GridMoments, tol: f64, what: &str) {
    let th = post.theta_marginal();
    let pairs = [
        (post.phi.mean, o.phi_mean),
        (post.phi.variance, o.phi_var),
        (th.mean, o.theta_mean),
        (th.variance, o.theta_var),
    ];
    for (i, (a, b)) in pairs.iter().enumerate() {
        assert!((a - b).abs() < tol, "{what}: moment {i}: closed form {a}, grid {b}");
    }
}

#[test]
fn biased_posterior_matches_grid_quadrature() {
    for (seed, delta) in [(1, 0.0), (2, 0.7), (3, 3.5), (4, f64::INFINITY)] {
        let (cfg, ys, zs) = biased_data(seed);
        let post = biased_smi_posterior(&cfg, Bandwidth::new(delta).unwrap());
        let o = oracles::biased_oracle(&ys, &zs, cfg.sigma_y, cfg.sigma_z, cfg.sigma_theta, delta);
        assert_moments(&post, &o, 1e-6, &format!("biased seed {seed} delta {delta}"));
    }
}

#[test]
fn regression_posterior_matches_grid_quadrature() {
    for (seed, delta) in [(1, 0.0), (2, 0.3), (3, 2.0), (4, f64::INFINITY)] {
        let (cfg, xs, ys, zs) = regression_data(seed);
        let post = regression_smi_posterior(&cfg, Bandwidth::new(delta).unwrap()).unwrap();
        let o = oracles::regression_oracle(&xs, &ys, &zs, cfg.sigma_y, cfg.sigma_z, delta);
        assert_moments(&post, &o, 1e-6, &format!("regression seed {seed} delta {delta}"));
    }
}

#[test]
fn zero_bandwidth_is_the_joint_bayes_posterior() {
    for seed in 0..10 {
        let (cfg, ..) = biased_data(seed);
        let (n, m) = (cfg.n as f64, cfg.m as f64);
        let (sy2, sz2, st2) = (cfg.sigma_y.powi(2), cfg.sigma_z.powi(2), cfg.sigma_theta.powi(2));
        let p = [[n / sy2 + m / sz2, n / sy2], [n / sy2, n / sy2 + 1.0 / st2]];
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        let b = [n * cfg.y_bar / sy2 + m * cfg.z_bar / sz2, n * cfg.y_bar / sy2];
        let mean_phi = (p[1][1] * b[0] - p[0][1] * b[1]) / det;
        let post = biased_smi_posterior(&cfg, Bandwidth::zero());
        assert!((post.phi.mean - mean_phi).abs() < 1e-12);
        assert!((post.phi.variance - p[1][1] / det).abs() < 1e-12);
        assert!((post.theta_marginal().variance - p[0][0] / det).abs() < 1e-12);
        assert!((post.covariance_phi_theta() + p[0][1] / det).abs() < 1e-12);
    }
}

#[test]
fn infinite_bandwidth_is_the_cut_posterior() {
    for seed in 0..10 {
        let (cfg, ..) = biased_data(seed);
        let post = biased_smi_posterior(&cfg, Bandwidth::Infinite);
        assert_eq!(post.phi.mean, cfg.z_bar);
        assert_eq!(post.phi.variance, cfg.sigma_z.powi(2) / cfg.m as f64);
        assert_eq!(post.lambda, 1.0);
        let (rcfg, ..) = regression_data(seed);
        let rpost = regression_smi_posterior(&rcfg, Bandwidth::Infinite).unwrap();
        assert_eq!(rpost.phi.mean, rcfg.stats.z_bar);
        assert_eq!(rpost.lambda, 1.0);
    }
}

#[test]
fn eta_matching_reproduces_delta_posteriors() {
    for seed in 0..10 {
        let (cfg, ..) = biased_data(seed);
        for delta in [0.0, 0.3, 1.0, 3.5, 12.0] {
            let d = Bandwidth::Finite(delta);
            let a = biased_smi_posterior(&cfg, d);
            let b = biased_eta_posterior(&cfg, eta_from_delta(cfg.sigma_y, d)).unwrap();
            assert!((a.phi.mean - b.phi.mean).abs() < 1e-12);
            assert!((a.phi.variance - b.phi.variance).abs() < 1e-12);
            assert!((a.theta_marginal().mean - b.theta_marginal().mean).abs() < 1e-12);
            assert!((a.theta_marginal().variance - b.theta_marginal().variance).abs() < 1e-12);
        }
    }
}

#[test]
fn f32_tracks_f64() {
    let (cfg, ..) = biased_data(7);
    let cfg32 = BiasedDataConfig::<f32> {
        n: cfg.n,
        m: cfg.m,
        sigma_y: cfg.sigma_y as f32,
        sigma_z: cfg.sigma_z as f32,
        sigma_theta: cfg.sigma_theta as f32,
        phi_true: 0.0,
        theta_true: 1.0,
        y_bar: cfg.y_bar as f32,
        z_bar: cfg.z_bar as f32,
    };
    let a = biased_smi_posterior(&cfg, Bandwidth::Finite(2.0));
    let b = biased_smi_posterior(&cfg32, Bandwidth::Finite(2.0));
    assert!((a.phi.mean - b.phi.mean as f64).abs() < 1e-5);
    let e64 = exact_elpd_biased(&cfg, Bandwidth::Finite(2.0), PredictiveForm::Exact).unwrap();
    let e32 = exact_elpd_biased(&cfg32, Bandwidth::Finite(2.0), PredictiveForm::Exact).unwrap();
    assert!((e64 - e32 as f64).abs() < 1e-4);
}

#[test]
fn pseudo_true_values_of_the_cut_limit() {
    for k in [1.0, 1.5, 2.0] {
        let cfg = RegressionConfig::<f64>::standard(k);
        let (phi, theta) = pseudo_true_values(&cfg, Bandwidth::Infinite);
        assert_eq!(phi, cfg.phi_true);
        let p = cfg.population;
        assert!((theta - p.mk1 / p.m2).abs() < 1e-14);
    }
}
