mod oracles;

use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use smi_core::model::{bayes_loss, cut_loss, generic_smoothed_y_loglik_pointwise, smi_loss};
use smi_core::models::{BiasedNormalModel, RegressionModel, RegressionObs};
use smi_core::quadrature::QuadratureBudget;
use smi_core::{AugmentedParams, Dims, InfluenceSetting, KernelSpec, MarginalEvaluator, SmiError, TwoModuleModel};

const TAU: f64 = std::f64::consts::TAU;

fn model() -> BiasedNormalModel<f64> {
    BiasedNormalModel {
        sigma_y: 1.0,
        sigma_z: 2.0,
        sigma_theta: 0.33,
    }
}

fn data() -> (Vec<f64>, Vec<f64>) {
    (vec![1.2, 0.4, 2.1, 0.9, 1.6], vec![-0.3, 0.8, 1.1])
}

fn lnorm(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * (TAU * v).ln() - (x - m).powi(2) / (2.0 * v)
}

fn quad() -> MarginalEvaluator<f64> {
    MarginalEvaluator::Quadrature {
        lower: -10.0,
        upper: 10.0,
        budget: QuadratureBudget::default(),
    }
}

fn params(phi: f64, tt: f64, th: f64) -> AugmentedParams<f64> {
    AugmentedParams::new(Dims { phi: 1, theta: 1, y: 1, z: 1 }, vec![phi], vec![tt], vec![th]).unwrap()
}

#[test]
fn bayes_loss_is_the_negative_log_likelihood() {
    let (ys, zs) = data();
    let direct = -zs.iter().map(|&z| lnorm(z, 0.4, 4.0)).sum::<f64>() - ys.iter().map(|&y| lnorm(y, 0.4 + 0.7, 1.0)).sum::<f64>();
    assert!((bayes_loss(&model(), &[0.4], &[0.7], &ys, &zs) - direct).abs() < 1e-12);
}

#[test]
fn closed_form_marginal_matches_quadrature() {
    let (ys, _) = data();
    let m = model();
    for phi in [-1.0, 0.0, 0.5, 2.0] {
        let a = MarginalEvaluator::ClosedForm.log_marginal_y(&m, &[phi], &ys).unwrap();
        let b = quad().log_marginal_y(&m, &[phi], &ys).unwrap();
        let (_, _, c) = oracles::bulk(&|t| lnorm(t, 0.0, 0.33 * 0.33) + ys.iter().map(|&y| lnorm(y, phi + t, 1.0)).sum::<f64>(), -50.0, 50.0);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        assert!((a - c).abs() < 1e-9, "{a} vs {c}");
    }
}

#[test]
fn enumeration_marginal_on_a_two_point_prior() {
    struct TwoPoint;
    impl TwoModuleModel<f64> for TwoPoint {
        type YObs = f64;
        type ZObs = f64;
        fn dims(&self) -> Dims {
            Dims { phi: 1, theta: 1, y: 1, z: 1 }
        }
        fn z_loglik_pointwise(&self, phi: &[f64], z: &f64) -> f64 {
            lnorm(*z, phi[0], 1.0)
        }
        fn y_loglik_pointwise(&self, phi: &[f64], theta: &[f64], y: &f64) -> f64 {
            lnorm(*y, phi[0] + theta[0], 1.0)
        }
        fn log_prior_phi(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn log_prior_theta_given_phi(&self, theta: &[f64], _: &[f64]) -> f64 {
            if theta[0] == 0.0 { 0.25f64.ln() } else { 0.75f64.ln() }
        }
    }
    let ys = [0.5, 1.5];
    let ev = MarginalEvaluator::Enumeration {
        thetas: vec![vec![0.0], vec![1.0]],
    };
    let got = ev.log_marginal_y(&TwoPoint, &[0.2], &ys).unwrap();
    let p0: f64 = ys.iter().map(|&y| lnorm(y, 0.2, 1.0)).sum::<f64>().exp();
    let p1: f64 = ys.iter().map(|&y| lnorm(y, 1.2, 1.0)).sum::<f64>().exp();
    assert!((got - (0.25 * p0 + 0.75 * p1).ln()).abs() < 1e-12);
}

#[test]
fn improper_theta_prior_refuses_quadrature() {
    let m = RegressionModel { sigma_y: 0.25, sigma_z: 3.0 };
    let ys = vec![RegressionObs { x: 1.0, y: 1.0 }, RegressionObs { x: 0.5, y: 0.2 }];
    assert!(matches!(quad().log_marginal_y(&m, &[0.0], &ys), Err(SmiError::MarginalNotAvailable(_))));
    assert!(MarginalEvaluator::ClosedForm.log_marginal_y(&m, &[0.0], &ys).is_ok());
}

#[test]
fn cut_loss_integrates_to_the_z_likelihood() {
    // ∫ exp(−l_c(φ, θ)) π(θ) dθ = p(Z | φ), since the Y factor is a
    // normalized conditional in θ.
    let (ys, zs) = data();
    let m = model();
    for phi in [-0.5, 0.3, 1.7] {
        let (_, _, lz) = oracles::bulk(
            &|t| -cut_loss(&m, &[phi], &[t], &ys, &zs, &MarginalEvaluator::ClosedForm).unwrap() + lnorm(t, 0.0, 0.33 * 0.33),
            -50.0,
            50.0,
        );
        let direct: f64 = zs.iter().map(|&z| lnorm(z, phi, 4.0)).sum();
        assert!((lz - direct).abs() < 1e-9);
    }
}

#[test]
fn smi_loss_components() {
    let (ys, zs) = data();
    let m = model();
    let p = params(0.3, 0.5, 0.8);
    let lb = bayes_loss(&m, &[0.3], &[0.8], &ys, &zs);
    let lm = MarginalEvaluator::ClosedForm.log_marginal_y(&m, &[0.3], &ys).unwrap();
    let ly_tilde: f64 = ys.iter().map(|&y| lnorm(y, 0.8, 1.0)).sum();
    let ls_tilde: f64 = ys.iter().map(|&y| lnorm(y, 0.8, 1.0 + 1.5 * 1.5)).sum();
    let ev = MarginalEvaluator::ClosedForm;
    let loss = |s: InfluenceSetting<f64>| smi_loss(&m, &s, &p, &ys, &zs, &ev).unwrap();
    assert_eq!(loss(InfluenceSetting::Bayes), lb);
    assert!((loss(InfluenceSetting::Cut) - (lb + lm)).abs() < 1e-12);
    assert!((loss(InfluenceSetting::Gamma { gamma: 0.3 }) - (lb + 0.7 * lm)).abs() < 1e-12);
    assert!((loss(InfluenceSetting::Eta { eta: 0.4 }) - (lb - 0.4 * ly_tilde + lm)).abs() < 1e-12);
    let delta = InfluenceSetting::Delta {
        kernel: KernelSpec::Gaussian(1.5),
    };
    assert!((loss(delta) - (lb - ls_tilde + lm)).abs() < 1e-12);
    let e0 = smi_loss(&m, &InfluenceSetting::Eta { eta: 0.0 }, &p, &ys, &zs, &ev).unwrap();
    assert!((e0 - loss(InfluenceSetting::Cut)).abs() < 1e-12);
}

#[test]
fn empty_y_reduces_to_the_z_loss() {
    let (_, zs) = data();
    let m = model();
    let p = params(0.3, 0.5, 0.8);
    let lz: f64 = -zs.iter().map(|&z| lnorm(z, 0.3, 4.0)).sum::<f64>();
    for s in [InfluenceSetting::Cut, InfluenceSetting::Eta { eta: 0.5 }, InfluenceSetting::Gamma { gamma: 0.2 }] {
        assert!((smi_loss(&m, &s, &p, &[], &zs, &quad()).unwrap() - lz).abs() < 1e-12);
    }
}

#[test]
fn generic_smoothing_matches_gaussian_closed_form() {
    let m = model();
    for (y, d) in [(0.3, 0.5), (1.7, 2.0), (-1.0, 0.05)] {
        let k = KernelSpec::Gaussian(d);
        let closed = m.smoothed_y_loglik_pointwise(&[0.2], &[0.4], &y, &k).unwrap();
        let generic = generic_smoothed_y_loglik_pointwise(&m, &[0.2], &[0.4], &y, &k).unwrap();
        assert!((closed - generic).abs() < 1e-8, "{closed} vs {generic}");
        assert!((closed - lnorm(y, 0.6, 1.0 + d * d)).abs() < 1e-12);
    }
    // top-hat: (2δ)⁻¹ ∫_{y−δ}^{y+δ} N(ỹ; μ, 1) dỹ
    let th = generic_smoothed_y_loglik_pointwise(&m, &[0.0], &[0.0], &0.5, &KernelSpec::TopHat(1.0)).unwrap();
    let n01 = Normal::standard();
    let mass = n01.cdf(1.5) - n01.cdf(-0.5);
    assert!((th - (mass / 2.0).ln()).abs() < 1e-9, "{th}");
}

proptest! {
    #[test]
    fn cut_minus_bayes_depends_on_phi_only(phi in -3.0..3.0f64, t1 in -2.0..2.0f64, t2 in -2.0..2.0f64) {
        let (ys, zs) = data();
        let m = model();
        let ev = MarginalEvaluator::ClosedForm;
        let d1 = cut_loss(&m, &[phi], &[t1], &ys, &zs, &ev).unwrap() - bayes_loss(&m, &[phi], &[t1], &ys, &zs);
        let d2 = cut_loss(&m, &[phi], &[t2], &ys, &zs, &ev).unwrap() - bayes_loss(&m, &[phi], &[t2], &ys, &zs);
        prop_assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn gamma_interpolates_linearly(phi in -3.0..3.0f64, t in -2.0..2.0f64, g in 0.0..1.0f64) {
        let (ys, zs) = data();
        let m = model();
        let ev = MarginalEvaluator::ClosedForm;
        let p = params(phi, 0.0, t);
        let b = smi_loss(&m, &InfluenceSetting::Bayes, &p, &ys, &zs, &ev).unwrap();
        let c = smi_loss(&m, &InfluenceSetting::Cut, &p, &ys, &zs, &ev).unwrap();
        let l = smi_loss(&m, &InfluenceSetting::Gamma { gamma: g }, &p, &ys, &zs, &ev).unwrap();
        prop_assert!((l - (g * b + (1.0 - g) * c)).abs() < 1e-9);
    }

    #[test]
    fn smoothing_is_monotone_flattening(y in -3.0..3.0f64, d1 in 0.01..3.0f64, extra in 0.01..3.0f64) {
        // For y far from the mean, more smoothing raises the density; near
        // the mean it lowers it. Either way the smoothed density stays below
        // the kernel-free peak value.
        let m = model();
        let a = m.smoothed_y_loglik_pointwise(&[0.0], &[0.0], &y, &KernelSpec::Gaussian(d1)).unwrap();
        let b = m.smoothed_y_loglik_pointwise(&[0.0], &[0.0], &y, &KernelSpec::Gaussian(d1 + extra)).unwrap();
        let peak = lnorm(0.0, 0.0, 1.0);
        prop_assert!(a <= peak && b <= peak);
    }
}
