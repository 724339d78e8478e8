use std::ops::Range;

use rand::Rng;

use super::config::McmcConfig;
use super::draws::PosteriorDraws;
use super::proposal::RandomWalkBlock;
use super::chain_rng;
use crate::error::{Result, SmiError};
use crate::kernels::KernelSpec;
use crate::model::{InfluenceSetting, Observation, TwoModuleModel};
use crate::scalar::Scalar;

/// How `Y` enters the outer (imputation-stage) target.
#[derive(Debug, Clone, Copy)]
enum OuterTerm<T> {
    Absent,
    Power(T),
    Smoothed(KernelSpec<T>),
}

fn outer_term<T: Scalar>(setting: &InfluenceSetting<T>) -> Result<OuterTerm<T>> {
    Ok(match setting.normalized() {
        InfluenceSetting::Bayes => OuterTerm::Power(T::one()),
        InfluenceSetting::Cut => OuterTerm::Absent,
        InfluenceSetting::Eta { eta } => OuterTerm::Power(eta),
        InfluenceSetting::Delta { kernel } => OuterTerm::Smoothed(kernel),
        InfluenceSetting::Gamma { .. } => {
            return Err(SmiError::InvalidSetting(
                "gamma-SMI has no nested sampler; use the discrete enumerator".into(),
            ))
        }
    })
}

fn neg_inf<T: Scalar>() -> T {
    T::neg_infinity()
}

/// One Metropolis step on `state[range]`.
#[allow(clippy::too_many_arguments)]
fn mh_step<T, R, F>(
    block: &mut RandomWalkBlock,
    state: &mut Vec<T>,
    range: Range<usize>,
    current: &mut T,
    mut eval: F,
    rng: &mut R,
    adapting: bool,
) -> Result<()>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&[T]) -> Result<T>,
{
    let mut proposal = state.clone();
    block.propose(&state[range.clone()], &mut proposal[range], rng);
    let lp = eval(&proposal)?;
    let log_alpha = if lp == neg_inf() || lp.is_nan() {
        f64::NEG_INFINITY
    } else if *current == neg_inf() {
        f64::INFINITY
    } else {
        (lp - *current).to_f64_lossy()
    };
    let accept = log_alpha >= 0.0 || f64::unit_uniform(rng).ln() < log_alpha;
    if accept {
        *state = proposal;
        *current = lp;
    }
    block.record(accept, log_alpha, state, adapting);
    Ok(())
}

/// One Metropolis step on the concatenation `(a, b)`.
#[allow(clippy::too_many_arguments)]
fn joint_step<T, R, F>(
    block: &mut RandomWalkBlock,
    a: &mut [T],
    b: &mut [T],
    current: &mut T,
    mut eval: F,
    rng: &mut R,
    adapting: bool,
) -> Result<()>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&[T], &[T]) -> Result<T>,
{
    let na = a.len();
    let mut state: Vec<T> = a.iter().chain(b.iter()).copied().collect();
    let len = state.len();
    mh_step(block, &mut state, 0..len, current, |v| eval(&v[..na], &v[na..]), rng, adapting)?;
    a.copy_from_slice(&state[..na]);
    b.copy_from_slice(&state[na..]);
    Ok(())
}

struct Targets<'a, T: Scalar, M: TwoModuleModel<T> + ?Sized> {
    model: &'a M,
    ys: &'a [M::YObs],
    zs: &'a [M::ZObs],
}

impl<T: Scalar, M: TwoModuleModel<T> + ?Sized> Targets<'_, T, M> {
    fn imputation(&self, phi: &[T]) -> T {
        let lp = self.model.log_prior_phi(phi);
        if lp == neg_inf() {
            return lp;
        }
        lp + self.model.z_loglik(phi, self.zs)
    }

    fn outer(&self, term: &OuterTerm<T>, phi: &[T], theta_tilde: &[T]) -> Result<T> {
        let base = self.imputation(phi);
        if base == neg_inf() {
            return Ok(base);
        }
        let y_part = match term {
            OuterTerm::Absent => return Ok(base),
            OuterTerm::Power(w) => {
                let l = self.model.y_loglik(phi, theta_tilde, self.ys);
                if l == neg_inf() {
                    return Ok(l);
                }
                *w * l
            }
            OuterTerm::Smoothed(k) => self.model.smoothed_y_loglik(phi, theta_tilde, self.ys, k)?,
        };
        Ok(base + self.model.log_prior_theta_given_phi(theta_tilde, phi) + y_part)
    }

    fn analysis(&self, phi: &[T], theta: &[T], ys: &[M::YObs]) -> T {
        let lp = self.model.log_prior_theta_given_phi(theta, phi);
        if lp == neg_inf() {
            return lp;
        }
        lp + self.model.y_loglik(phi, theta, ys)
    }
}

fn phi_blocks<T: Scalar, M: TwoModuleModel<T> + ?Sized>(model: &M, config: &McmcConfig) -> Vec<(Range<usize>, RandomWalkBlock)> {
    model
        .phi_blocks()
        .into_iter()
        .enumerate()
        .map(|(b, r)| {
            let scale = config
                .phi_scales
                .as_ref()
                .and_then(|s| s.get(b).copied())
                .unwrap_or(config.initial_scale);
            let dim = r.len();
            (r, RandomWalkBlock::new(dim, scale))
        })
        .collect()
}

fn check_burn_in(blocks: &[(&str, &RandomWalkBlock)]) -> Result<()> {
    if blocks.iter().any(|(_, b)| b.proposed > 0 && b.accepted == 0) {
        let scales = blocks
            .iter()
            .map(|(n, b)| format!("{n}: scale {:.3e}, accepted {}/{}", b.scale(), b.accepted, b.proposed))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(SmiError::ZeroAcceptance { scales });
    }
    Ok(())
}

fn reset_counts(block: &mut RandomWalkBlock) {
    block.proposed = 0;
    block.accepted = 0;
}

fn start_state<T: Scalar, M: TwoModuleModel<T> + ?Sized>(model: &M) -> Result<(Vec<T>, Vec<T>)> {
    let (phi, theta) = model.initial_params();
    let d = model.dims();
    if phi.len() != d.phi || theta.len() != d.theta {
        return Err(SmiError::DimensionMismatch("initial parameters do not match dims".into()));
    }
    Ok((phi, theta))
}

fn ensure_finite<T: Scalar>(lp: T, what: &str) -> Result<()> {
    if lp == neg_inf() || lp.is_nan() {
        return Err(SmiError::InvalidConfig(format!("initial state has zero {what} density")));
    }
    Ok(())
}

/// Inner θ chain at fixed φ, warm-started from `theta`.
#[allow(clippy::too_many_arguments)]
fn run_inner<T, M, R>(
    targets: &Targets<'_, T, M>,
    phi: &[T],
    theta: &mut Vec<T>,
    block: &mut RandomWalkBlock,
    steps: usize,
    rng: &mut R,
    adapting: bool,
) -> Result<()>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
    R: Rng + ?Sized,
{
    let dt = theta.len();
    let mut lp = targets.analysis(phi, theta, targets.ys);
    for _ in 0..steps {
        mh_step(block, theta, 0..dt, &mut lp, |t| Ok(targets.analysis(phi, t, targets.ys)), rng, adapting)?;
    }
    Ok(())
}

/// Nested MCMC for the Bayes, Cut, η-SMI and δ-SMI posteriors.
///
/// The outer chain targets `p(Z|φ)π(φ)` for Cut and
/// `p(Z|φ) w(Y; φ, θ̃) π(φ)π(θ̃|φ)` otherwise, where `w` is `p(Y|φ,θ̃)^η`
/// or `p_δ(Y|φ,θ̃)` (Bayes is η = 1). Each outer iteration is followed by
/// `inner_steps` updates of θ targeting `π(θ | Y, φ)`; the final inner
/// state is recorded.
pub fn run_nested_mcmc<T, M>(
    model: &M,
    setting: &InfluenceSetting<T>,
    ys: &[M::YObs],
    zs: &[M::ZObs],
    config: &McmcConfig,
) -> Result<PosteriorDraws<T>>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    config.validate()?;
    let term = outer_term(setting)?;
    let uses_tilde = !matches!(term, OuterTerm::Absent);
    let targets = Targets { model, ys, zs };
    let mut rng = chain_rng(config.seed, config.chain_id);
    let (mut phi, mut theta) = start_state(model)?;
    let mut theta_tilde = theta.clone();
    let dt = theta.len();

    let mut blocks = phi_blocks(model, config);
    let mut tilde_block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut inner_block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut joint_block = RandomWalkBlock::new(phi.len() + dt, config.initial_scale);

    let mut lp = targets.outer(&term, &phi, &theta_tilde)?;
    ensure_finite(lp, "outer")?;
    ensure_finite(targets.analysis(&phi, &theta, ys), "inner")?;

    let burn = config.burn_iterations();
    let mut draws = PosteriorDraws {
        setting: setting.label(),
        seed: config.seed,
        chain_id: config.chain_id,
        phi: Vec::with_capacity(config.retained()),
        theta_tilde: uses_tilde.then(|| Vec::with_capacity(config.retained())),
        theta: Vec::with_capacity(config.retained()),
        y_tilde: None,
        acceptance: Vec::new(),
    };

    for it in 0..config.outer_steps {
        if it == burn {
            let mut named: Vec<(&str, &RandomWalkBlock)> = blocks.iter().map(|(_, b)| ("phi", b)).collect();
            if uses_tilde {
                named.push(("theta_tilde", &tilde_block));
            }
            named.push(("theta", &inner_block));
            check_burn_in(&named)?;
            blocks.iter_mut().for_each(|(_, b)| reset_counts(b));
            reset_counts(&mut tilde_block);
            reset_counts(&mut inner_block);
            reset_counts(&mut joint_block);
        }
        let adapting = config.adapt && it < burn;
        for (range, block) in blocks.iter_mut() {
            let tt = &theta_tilde;
            mh_step(block, &mut phi, range.clone(), &mut lp, |p| targets.outer(&term, p, tt), &mut rng, adapting)?;
        }
        if uses_tilde {
            let ph = &phi;
            mh_step(
                &mut tilde_block,
                &mut theta_tilde,
                0..dt,
                &mut lp,
                |t| targets.outer(&term, ph, t),
                &mut rng,
                adapting,
            )?;
            // φ and θ̃ are often strongly correlated; a joint move with a
            // learned shape keeps the chain from crawling along the ridge.
            joint_step(
                &mut joint_block,
                &mut phi,
                &mut theta_tilde,
                &mut lp,
                |p, t| targets.outer(&term, p, t),
                &mut rng,
                adapting,
            )?;
        }
        run_inner(&targets, &phi, &mut theta, &mut inner_block, config.inner_steps, &mut rng, adapting)?;
        if it >= burn && (it - burn) % config.thin == 0 {
            draws.phi.push(phi.clone());
            if let Some(t) = draws.theta_tilde.as_mut() {
                t.push(theta_tilde.clone());
            }
            draws.theta.push(theta.clone());
        }
    }
    draws.acceptance = blocks
        .iter()
        .enumerate()
        .map(|(b, (_, blk))| (format!("phi_block_{b}"), blk.acceptance_rate()))
        .collect();
    if uses_tilde {
        draws.acceptance.push(("theta_tilde".into(), tilde_block.acceptance_rate()));
        draws.acceptance.push(("joint".into(), joint_block.acceptance_rate()));
    }
    draws.acceptance.push(("theta".into(), inner_block.acceptance_rate()));
    Ok(draws)
}

fn kernel_log_weight<T: Scalar>(kernel: &KernelSpec<T>, y: T, y_tilde: T) -> T {
    if kernel.is_discrete() {
        match (y.to_u64(), y_tilde.to_u64()) {
            (Some(a), Some(b)) if y_tilde >= T::zero() && y_tilde.fract() == T::zero() => kernel.log_mass(a, b),
            _ => neg_inf(),
        }
    } else {
        kernel.log_density(y, y_tilde)
    }
}

/// δ-SMI by data augmentation: the outer chain targets
/// `p(Z|φ) K_δ(Y, Ỹ) p(Ỹ|φ, θ̃) π(φ) π(θ̃|φ)` with block updates of φ, θ̃
/// and every `Ỹ_i`; θ is drawn by the same inner chain as the nested
/// sampler. Count responses move by integer random-walk steps.
pub fn run_augmented_mcmc<T, M>(
    model: &M,
    setting: &InfluenceSetting<T>,
    ys: &[M::YObs],
    zs: &[M::ZObs],
    config: &McmcConfig,
) -> Result<PosteriorDraws<T>>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    config.validate()?;
    let kernel = match setting {
        InfluenceSetting::Delta { kernel } if kernel.bandwidth() > T::zero() && kernel.bandwidth().is_finite() => *kernel,
        other => {
            return Err(SmiError::InvalidSetting(format!(
                "augmentation needs a finite positive-bandwidth kernel, got {}",
                other.label()
            )))
        }
    };
    kernel.validate()?;
    let count_data = M::YObs::is_count();
    if count_data != kernel.is_discrete() {
        return Err(SmiError::SmoothingNotAvailable {
            kernel: kernel.name().into(),
            reason: "kernel does not match the response type".into(),
        });
    }
    let targets = Targets { model, ys, zs };
    let mut rng = chain_rng(config.seed, config.chain_id);
    let (mut phi, mut theta) = start_state(model)?;
    let mut theta_tilde = theta.clone();
    let mut y_tilde: Vec<M::YObs> = ys.to_vec();
    let dt = theta.len();

    let outer = |phi: &[T], tt: &[T], yt: &[M::YObs]| -> T {
        let base = targets.imputation(phi);
        if base == neg_inf() {
            return base;
        }
        let a = targets.analysis(phi, tt, yt);
        base + a
    };

    let mut blocks = phi_blocks(model, config);
    let mut tilde_block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut inner_block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut joint_block = RandomWalkBlock::new(phi.len() + dt, config.initial_scale);
    let mut y_blocks: Vec<RandomWalkBlock> = ys
        .iter()
        .map(|y| {
            let s = if count_data {
                (kernel.half_width(y.response()).to_f64_lossy() / 2.0).max(1.0)
            } else {
                (kernel.half_width(y.response()).to_f64_lossy() / 2.0).max(config.initial_scale)
            };
            RandomWalkBlock::scale_only(s)
        })
        .collect();

    let mut lp = outer(&phi, &theta_tilde, &y_tilde);
    ensure_finite(lp, "outer")?;

    let burn = config.burn_iterations();
    let mut draws = PosteriorDraws {
        setting: format!("{} (augmented)", setting.label()),
        seed: config.seed,
        chain_id: config.chain_id,
        phi: Vec::with_capacity(config.retained()),
        theta_tilde: Some(Vec::with_capacity(config.retained())),
        theta: Vec::with_capacity(config.retained()),
        y_tilde: Some(Vec::with_capacity(config.retained())),
        acceptance: Vec::new(),
    };

    for it in 0..config.outer_steps {
        if it == burn {
            let mut named: Vec<(&str, &RandomWalkBlock)> = blocks.iter().map(|(_, b)| ("phi", b)).collect();
            named.push(("theta_tilde", &tilde_block));
            named.push(("theta", &inner_block));
            check_burn_in(&named)?;
            blocks.iter_mut().for_each(|(_, b)| reset_counts(b));
            reset_counts(&mut tilde_block);
            reset_counts(&mut inner_block);
            reset_counts(&mut joint_block);
            y_blocks.iter_mut().for_each(reset_counts);
        }
        let adapting = config.adapt && it < burn;
        for (range, block) in blocks.iter_mut() {
            let (tt, yt) = (&theta_tilde, &y_tilde);
            mh_step(block, &mut phi, range.clone(), &mut lp, |p| Ok(outer(p, tt, yt)), &mut rng, adapting)?;
        }
        {
            let (ph, yt) = (&phi, &y_tilde);
            mh_step(
                &mut tilde_block,
                &mut theta_tilde,
                0..dt,
                &mut lp,
                |t| Ok(outer(ph, t, yt)),
                &mut rng,
                adapting,
            )?;
        }
        {
            let yt = &y_tilde;
            joint_step(&mut joint_block, &mut phi, &mut theta_tilde, &mut lp, |p, t| Ok(outer(p, t, yt)), &mut rng, adapting)?;
        }
        for (i, block) in y_blocks.iter_mut().enumerate() {
            let y_obs = ys[i].response();
            let cur = y_tilde[i].response();
            let prop = if count_data {
                let w = block.scale().round().max(1.0) as u64;
                let step = rng.random_range(1..=w);
                let step = T::from_u64(step).expect("count representable");
                if rng.random::<bool>() {
                    cur + step
                } else {
                    cur - step
                }
            } else {
                cur + T::lit(block.scale()) * T::standard_normal(&mut rng)
            };
            let cand = y_tilde[i].with_response(prop);
            let kw_new = kernel_log_weight(&kernel, y_obs, prop);
            let log_alpha = if kw_new == neg_inf() {
                f64::NEG_INFINITY
            } else {
                let new = kw_new + model.y_loglik_pointwise(&phi, &theta_tilde, &cand);
                let old = kernel_log_weight(&kernel, y_obs, cur) + model.y_loglik_pointwise(&phi, &theta_tilde, &y_tilde[i]);
                if new == neg_inf() {
                    f64::NEG_INFINITY
                } else {
                    (new - old).to_f64_lossy()
                }
            };
            let accept = log_alpha >= 0.0 || f64::unit_uniform(&mut rng).ln() < log_alpha;
            if accept {
                y_tilde[i] = cand;
            }
            block.record(accept, log_alpha, &[y_tilde[i].response()], adapting);
        }
        lp = outer(&phi, &theta_tilde, &y_tilde);
        run_inner(&targets, &phi, &mut theta, &mut inner_block, config.inner_steps, &mut rng, adapting)?;
        if it >= burn && (it - burn) % config.thin == 0 {
            draws.phi.push(phi.clone());
            if let Some(t) = draws.theta_tilde.as_mut() {
                t.push(theta_tilde.clone());
            }
            if let Some(t) = draws.y_tilde.as_mut() {
                t.push(y_tilde.iter().map(|y| y.response()).collect());
            }
            draws.theta.push(theta.clone());
        }
    }
    draws.acceptance = blocks
        .iter()
        .enumerate()
        .map(|(b, (_, blk))| (format!("phi_block_{b}"), blk.acceptance_rate()))
        .collect();
    draws.acceptance.push(("theta_tilde".into(), tilde_block.acceptance_rate()));
    draws.acceptance.push(("joint".into(), joint_block.acceptance_rate()));
    draws.acceptance.push(("theta".into(), inner_block.acceptance_rate()));
    let y_rate = y_blocks.iter().map(RandomWalkBlock::acceptance_rate).sum::<f64>() / y_blocks.len().max(1) as f64;
    draws.acceptance.push(("y_tilde".into(), y_rate));
    Ok(draws)
}

/// Single-chain Metropolis-within-Gibbs on the full Bayes posterior
/// `p(Z|φ)p(Y|φ,θ)π(φ,θ)`, updating the φ blocks, θ, and then (φ, θ) jointly.
pub fn run_full_bayes<T, M>(model: &M, ys: &[M::YObs], zs: &[M::ZObs], config: &McmcConfig) -> Result<PosteriorDraws<T>>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    config.validate()?;
    let mut rng = chain_rng(config.seed, config.chain_id);
    let (mut phi, mut theta) = start_state(model)?;
    let dt = theta.len();
    let joint = |p: &[T], t: &[T]| -> T {
        let lp = model.log_prior(p, t);
        if lp == neg_inf() {
            return lp;
        }
        let lz = model.z_loglik(p, zs);
        if lz == neg_inf() {
            return lz;
        }
        lp + lz + model.y_loglik(p, t, ys)
    };
    let mut blocks = phi_blocks(model, config);
    let mut theta_block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut joint_block = RandomWalkBlock::new(phi.len() + dt, config.initial_scale);
    let mut lp = joint(&phi, &theta);
    ensure_finite(lp, "posterior")?;
    let burn = config.burn_iterations();
    let mut draws = PosteriorDraws {
        setting: "bayes (joint chain)".into(),
        seed: config.seed,
        chain_id: config.chain_id,
        phi: Vec::with_capacity(config.retained()),
        theta_tilde: None,
        theta: Vec::with_capacity(config.retained()),
        y_tilde: None,
        acceptance: Vec::new(),
    };
    for it in 0..config.outer_steps {
        if it == burn {
            let mut named: Vec<(&str, &RandomWalkBlock)> = blocks.iter().map(|(_, b)| ("phi", b)).collect();
            named.push(("theta", &theta_block));
            check_burn_in(&named)?;
            blocks.iter_mut().for_each(|(_, b)| reset_counts(b));
            reset_counts(&mut theta_block);
            reset_counts(&mut joint_block);
        }
        let adapting = config.adapt && it < burn;
        for (range, block) in blocks.iter_mut() {
            let th = &theta;
            mh_step(block, &mut phi, range.clone(), &mut lp, |p| Ok(joint(p, th)), &mut rng, adapting)?;
        }
        let ph = &phi;
        mh_step(&mut theta_block, &mut theta, 0..dt, &mut lp, |t| Ok(joint(ph, t)), &mut rng, adapting)?;
        joint_step(&mut joint_block, &mut phi, &mut theta, &mut lp, |p, t| Ok(joint(p, t)), &mut rng, adapting)?;
        if it >= burn && (it - burn) % config.thin == 0 {
            draws.phi.push(phi.clone());
            draws.theta.push(theta.clone());
        }
    }
    draws.acceptance = blocks
        .iter()
        .enumerate()
        .map(|(b, (_, blk))| (format!("phi_block_{b}"), blk.acceptance_rate()))
        .collect();
    draws.acceptance.push(("theta".into(), theta_block.acceptance_rate()));
    draws.acceptance.push(("joint".into(), joint_block.acceptance_rate()));
    Ok(draws)
}

/// Draws from `π(θ | Y, φ)` at fixed φ (one chain of `outer_steps`
/// iterations with the configured burn-in and thinning).
pub fn sample_theta_given_phi<T, M>(model: &M, phi: &[T], ys: &[M::YObs], config: &McmcConfig) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    config.validate()?;
    let targets = Targets { model, ys, zs: &[] };
    let mut rng = chain_rng(config.seed, config.chain_id);
    let (_, mut theta) = start_state(model)?;
    let dt = theta.len();
    let mut block = RandomWalkBlock::new(dt, config.initial_scale);
    let mut lp = targets.analysis(phi, &theta, ys);
    ensure_finite(lp, "conditional")?;
    let burn = config.burn_iterations();
    let mut out = Vec::with_capacity(config.retained());
    for it in 0..config.outer_steps {
        if it == burn {
            check_burn_in(&[("theta", &block)])?;
        }
        let adapting = config.adapt && it < burn;
        mh_step(&mut block, &mut theta, 0..dt, &mut lp, |t| Ok(targets.analysis(phi, t, ys)), &mut rng, adapting)?;
        if it >= burn && (it - burn) % config.thin == 0 {
            out.push(theta.clone());
        }
    }
    Ok(out)
}
