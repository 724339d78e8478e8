use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smi_core::closed_form::*;
use smi_core::models::{BiasedNormalModel, RegressionModel};
use smi_core::sampler::{run_augmented_mcmc, run_full_bayes, run_nested_mcmc, McmcConfig, PosteriorDraws};
use smi_core::stats::{mcse_mean, mean};
use smi_core::{InfluenceSetting, KernelSpec, SmiError};

/// `(label, estimate, truth, mcse)` for φ and θ means and variances.
fn moment_checks(d: &PosteriorDraws<f64>, post: &GaussianPosterior<f64>) -> Vec<(String, f64, f64, f64)> {
    let mut out = Vec::new();
    for (name, col, truth) in [
        ("phi", d.phi_column(0), post.phi),
        ("theta", d.theta_column(0), post.theta_marginal()),
    ] {
        let m = mean(&col);
        out.push((format!("{name} mean"), m, truth.mean, mcse_mean(&col).unwrap()));
        let sq: Vec<f64> = col.iter().map(|x| (x - truth.mean).powi(2)).collect();
        out.push((format!("{name} var"), mean(&sq), truth.variance, mcse_mean(&sq).unwrap()));
    }
    out
}

fn assert_within(d: &PosteriorDraws<f64>, post: &GaussianPosterior<f64>, min_ess: f64) {
    assert!(d.min_ess() >= min_ess, "ESS {:?}", d.ess());
    for (label, est, truth, se) in moment_checks(d, post) {
        assert!((est - truth).abs() < 3.0 * se, "{label}: {est} vs {truth} (se {se})");
    }
}

fn biased() -> (BiasedNormalModel<f64>, BiasedDataConfig<f64>, Vec<f64>, Vec<f64>) {
    let cfg = BiasedDataConfig::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (ys, zs) = BiasedNormalModel::simulate(&cfg, &mut rng);
    (BiasedNormalModel::from_config(&cfg), cfg.with_data(&ys, &zs), ys, zs)
}

fn cfg(outer: usize, inner: usize, seed: u64) -> McmcConfig {
    McmcConfig {
        outer_steps: outer,
        inner_steps: inner,
        seed,
        ..McmcConfig::default()
    }
}

#[test]
fn nested_chain_matches_biased_closed_form() {
    let (model, c, ys, zs) = biased();
    for (setting, delta) in [
        (InfluenceSetting::Delta { kernel: KernelSpec::Gaussian(1.5) }, Bandwidth::Finite(1.5)),
        (InfluenceSetting::Cut, Bandwidth::Infinite),
        (InfluenceSetting::Bayes, Bandwidth::zero()),
    ] {
        let t = Instant::now();
        let d = run_nested_mcmc(&model, &setting, &ys, &zs, &cfg(80_000, 10, 1)).unwrap();
        eprintln!("nested {} {:?} ess {:?}", setting.label(), t.elapsed(), d.ess());
        assert_within(&d, &biased_smi_posterior(&c, delta), 1000.0);
    }
}

#[test]
fn augmented_chain_matches_biased_closed_form() {
    let (model, c, ys, zs) = biased();
    let setting = InfluenceSetting::Delta {
        kernel: KernelSpec::Gaussian(1.5),
    };
    let t = Instant::now();
    let d = run_augmented_mcmc(&model, &setting, &ys, &zs, &cfg(100_000, 10, 2)).unwrap();
    eprintln!("augmented {:?} ess {:?} acc {:?}", t.elapsed(), d.ess(), d.acceptance);
    assert!(d.y_tilde.is_some());
    assert_within(&d, &biased_smi_posterior(&c, Bandwidth::Finite(1.5)), 1000.0);
}

#[test]
fn nested_chain_matches_regression_closed_form() {
    let rc = RegressionConfig::standard(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (xs, ys, zs) = RegressionModel::simulate(&rc, (0.0, 2.0), &mut rng);
    let model = RegressionModel::from_config(&rc);
    let obs = RegressionModel::observations(&xs, &ys);
    let fitted = rc.with_data(&xs, &ys, &zs).unwrap();
    let setting = InfluenceSetting::Delta {
        kernel: KernelSpec::Gaussian(0.5),
    };
    let t = Instant::now();
    let d = run_nested_mcmc(&model, &setting, &obs, &zs, &cfg(100_000, 10, 3)).unwrap();
    eprintln!("regression nested {:?} ess {:?}", t.elapsed(), d.ess());
    assert_within(&d, &regression_smi_posterior(&fitted, Bandwidth::Finite(0.5)).unwrap(), 1000.0);
    let t = Instant::now();
    let d = run_augmented_mcmc(&model, &setting, &obs, &zs, &cfg(150_000, 10, 4)).unwrap();
    eprintln!("regression augmented {:?} ess {:?}", t.elapsed(), d.ess());
    assert_within(&d, &regression_smi_posterior(&fitted, Bandwidth::Finite(0.5)).unwrap(), 1000.0);
}

#[test]
fn full_bayes_chain_matches_closed_form() {
    let (model, c, ys, zs) = biased();
    let d = run_full_bayes(&model, &ys, &zs, &cfg(80_000, 1, 5)).unwrap();
    assert!(d.theta_tilde.is_none());
    assert_within(&d, &biased_smi_posterior(&c, Bandwidth::zero()), 1000.0);
}

#[test]
fn chains_are_deterministic_per_seed_and_stream() {
    let (model, _, ys, zs) = biased();
    let s = InfluenceSetting::Eta { eta: 0.3 };
    let a = run_nested_mcmc(&model, &s, &ys, &zs, &cfg(600, 5, 9)).unwrap();
    let b = run_nested_mcmc(&model, &s, &ys, &zs, &cfg(600, 5, 9)).unwrap();
    assert_eq!(a, b);
    let other = McmcConfig { chain_id: 1, ..cfg(600, 5, 9) };
    let c = run_nested_mcmc(&model, &s, &ys, &zs, &other).unwrap();
    assert_ne!(a.phi, c.phi);
}

#[test]
fn gamma_is_not_sampled() {
    let (model, _, ys, zs) = biased();
    assert!(run_nested_mcmc(&model, &InfluenceSetting::Gamma { gamma: 0.5 }, &ys, &zs, &cfg(100, 2, 0)).is_err());
}

#[test]
fn frozen_proposals_report_zero_acceptance() {
    let (model, _, ys, zs) = biased();
    let bad = McmcConfig {
        initial_scale: 1e6,
        adapt: false,
        ..cfg(400, 2, 0)
    };
    let err = run_nested_mcmc(&model, &InfluenceSetting::Cut, &ys, &zs, &bad).unwrap_err();
    assert!(matches!(err, SmiError::ZeroAcceptance { .. }), "{err:?}");
}

#[test]
fn draws_csv_has_named_columns() {
    let (model, _, ys, zs) = biased();
    let d = run_nested_mcmc(&model, &InfluenceSetting::Eta { eta: 0.5 }, &ys, &zs, &cfg(200, 2, 0)).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("chain,iter,phi_0,theta_tilde_0,theta_0\n"), "{}", &text[..60]);
    assert_eq!(text.lines().count(), d.len() + 1);
}
