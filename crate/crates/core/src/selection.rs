//! Predictive utilities over influence-parameter grids and selection of
//! δ* / η*.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{exact_elpd_biased, regression_loo_log_predictive, Bandwidth, BiasedDataConfig, PredictiveForm, RegressionConfig};
use crate::error::{Result, SmiError};
use crate::kernels::KernelSpec;
use crate::model::{InfluenceSetting, TwoModuleModel};
use crate::sampler::{run_nested_mcmc, McmcConfig, PosteriorDraws};
use crate::scalar::{log_mean_exp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaFamily {
    Delta,
    Eta,
}

impl MetaFamily {
    /// Scalar meta-parameter of a setting: δ for the δ family (0 for Bayes,
    /// ∞ for Cut), η for the η family (1 for Bayes, 0 for Cut).
    pub fn meta_of<T: Scalar>(&self, setting: &InfluenceSetting<T>) -> Result<T> {
        match (self, setting) {
            (Self::Delta, InfluenceSetting::Bayes) => Ok(T::zero()),
            (Self::Delta, InfluenceSetting::Cut) => Ok(T::infinity()),
            (Self::Delta, InfluenceSetting::Delta { kernel }) => Ok(kernel.bandwidth()),
            (Self::Eta, InfluenceSetting::Bayes) => Ok(T::one()),
            (Self::Eta, InfluenceSetting::Cut) => Ok(T::zero()),
            (Self::Eta, InfluenceSetting::Eta { eta }) => Ok(*eta),
            _ => Err(SmiError::InvalidSetting(format!("{} is not in the {:?} family", setting.label(), self))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Maximize,
    Minimize,
}

/// Utility evaluated over a grid strictly increasing in the meta-parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityCurve<T> {
    pub family: MetaFamily,
    pub goal: Goal,
    pub grid: Vec<InfluenceSetting<T>>,
    pub meta: Vec<T>,
    pub values: Vec<T>,
    pub std_errors: Vec<T>,
    /// Index of the optimum; first one on ties.
    pub best: usize,
}

impl<T: Scalar> UtilityCurve<T> {
    pub fn new(
        family: MetaFamily,
        goal: Goal,
        grid: Vec<InfluenceSetting<T>>,
        values: Vec<T>,
        std_errors: Vec<T>,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(SmiError::InvalidConfig("utility grid is empty".into()));
        }
        if values.len() != grid.len() || std_errors.len() != grid.len() {
            return Err(SmiError::DimensionMismatch(format!(
                "{} grid points, {} values, {} standard errors",
                grid.len(),
                values.len(),
                std_errors.len()
            )));
        }
        let meta = grid.iter().map(|s| family.meta_of(s)).collect::<Result<Vec<T>>>()?;
        if meta.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SmiError::InvalidConfig("grid must be strictly increasing in the meta-parameter".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(SmiError::InvalidConfig("utility values contain NaN".into()));
        }
        let best = optimum(&values, goal);
        Ok(Self {
            family,
            goal,
            grid,
            meta,
            values,
            std_errors,
            best,
        })
    }

    pub fn best_setting(&self) -> &InfluenceSetting<T> {
        &self.grid[self.best]
    }

    pub fn best_meta(&self) -> T {
        self.meta[self.best]
    }

    pub fn best_value(&self) -> T {
        self.values[self.best]
    }

    /// Neighbouring grid values around the optimum, the resolution δ* is
    /// known to.
    pub fn bracket(&self) -> (T, T) {
        let lo = self.meta[self.best.saturating_sub(1)];
        let hi = self.meta[(self.best + 1).min(self.meta.len() - 1)];
        (lo, hi)
    }

    /// CSV with columns `meta_param,utility,se`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "meta_param,utility,se")?;
        for i in 0..self.meta.len() {
            writeln!(w, "{},{},{}", self.meta[i], self.values[i], self.std_errors[i])?;
        }
        Ok(())
    }
}

fn optimum<T: Scalar>(values: &[T], goal: Goal) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = match goal {
            Goal::Maximize => v > values[best],
            Goal::Minimize => v < values[best],
        };
        if better {
            best = i;
        }
    }
    best
}

/// Settings for a δ grid; `0` maps to Bayes and `∞` to Cut.
pub fn delta_grid<T: Scalar>(deltas: &[T], kernel: KernelSpec<T>) -> Result<Vec<InfluenceSetting<T>>> {
    deltas.iter().map(|&d| InfluenceSetting::delta(kernel.with_bandwidth(d))).collect()
}

pub fn eta_grid<T: Scalar>(etas: &[T]) -> Result<Vec<InfluenceSetting<T>>> {
    etas.iter().map(|&e| InfluenceSetting::eta(e)).collect()
}

/// Exact ELPD of the biased-data example over a δ grid (Gaussian kernel).
pub fn exact_elpd_curve<T: Scalar>(cfg: &BiasedDataConfig<T>, deltas: &[T], form: PredictiveForm) -> Result<UtilityCurve<T>> {
    let grid = delta_grid(deltas, KernelSpec::Gaussian(T::one()))?;
    let values = deltas
        .iter()
        .map(|&d| exact_elpd_biased(cfg, Bandwidth::new(d)?, form))
        .collect::<Result<Vec<T>>>()?;
    let n = grid.len();
    UtilityCurve::new(MetaFamily::Delta, Goal::Maximize, grid, values, vec![T::zero(); n])
}

/// Pointwise estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseEstimate<T> {
    pub value: T,
    pub se: T,
    pub pointwise: Vec<T>,
}

/// Mean of the pointwise terms, SE = sample SD / √m.
pub fn loocv_from_pointwise<T: Scalar>(pointwise: Vec<T>) -> Result<PointwiseEstimate<T>> {
    let m = pointwise.len();
    if m < 2 {
        return Err(SmiError::TooFewObservations { min: 2, got: m });
    }
    let mf = T::from_usize_lossy(m);
    let value = pointwise.iter().copied().sum::<T>() / mf;
    let ss: T = pointwise.iter().map(|&v| (v - value) * (v - value)).sum();
    let sd = (ss / T::from_usize_lossy(m - 1)).sqrt();
    Ok(PointwiseEstimate {
        value,
        se: sd / mf.sqrt(),
        pointwise,
    })
}

/// `(1/m) Σ_j log p̃_δ(Z_j | Y, Z_{−j})` in the regression example, from the
/// closed-form leave-one-out predictive.
pub fn loocv_elpd_z_closed_form<T: Scalar>(cfg: &RegressionConfig<T>, zs: &[T], delta: Bandwidth<T>) -> Result<PointwiseEstimate<T>> {
    loocv_from_pointwise(regression_loo_log_predictive(cfg, zs, delta)?)
}

/// LOOCV for `Z` by refitting the nested sampler on each fold and averaging
/// `p(Z_j | φ^(s))` over the fold's draws. Fold `j` runs on stream
/// `config.chain_id + j`.
pub fn loocv_elpd_z_mcmc<T, M>(
    model: &M,
    setting: &InfluenceSetting<T>,
    ys: &[M::YObs],
    zs: &[M::ZObs],
    config: &McmcConfig,
) -> Result<PointwiseEstimate<T>>
where
    T: Scalar,
    M: TwoModuleModel<T>,
{
    if zs.len() < 2 {
        return Err(SmiError::TooFewObservations { min: 2, got: zs.len() });
    }
    let pointwise = (0..zs.len())
        .into_par_iter()
        .map(|j| {
            let rest: Vec<M::ZObs> = zs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, z)| z.clone()).collect();
            let fold_cfg = McmcConfig {
                chain_id: config.chain_id + j as u64,
                ..config.clone()
            };
            let draws = run_nested_mcmc(model, setting, ys, &rest, &fold_cfg)?;
            let lls: Vec<T> = draws.phi.iter().map(|p| model.z_loglik_pointwise(p, &zs[j])).collect();
            Ok(log_mean_exp(&lls))
        })
        .collect::<Result<Vec<T>>>()?;
    loocv_from_pointwise(pointwise)
}

/// WAIC estimate of the ELPD summed over observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaicEstimate<T> {
    pub elpd: T,
    pub se: T,
    pub lppd: T,
    pub p_waic: T,
    pub pointwise: Vec<T>,
}

/// `Σ_i [log mean_s exp(ll_si) − var_s(ll_si)]` from a draws × observations
/// matrix; SE = √(n · var_i(elpd_i)).
pub fn waic_elpd<T: Scalar>(loglik: &[Vec<T>]) -> Result<WaicEstimate<T>> {
    let s = loglik.len();
    if s < 2 {
        return Err(SmiError::TooFewObservations { min: 2, got: s });
    }
    let n = loglik[0].len();
    if loglik.iter().any(|row| row.len() != n) {
        return Err(SmiError::DimensionMismatch("ragged log-likelihood matrix".into()));
    }
    let sf = T::from_usize_lossy(s);
    let mut lppd = T::zero();
    let mut p_waic = T::zero();
    let mut pointwise = Vec::with_capacity(n);
    let mut col = vec![T::zero(); s];
    for i in 0..n {
        for (c, row) in col.iter_mut().zip(loglik) {
            *c = row[i];
        }
        let lp = log_mean_exp(&col);
        let mean = col.iter().copied().sum::<T>() / sf;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::from_usize_lossy(s - 1);
        lppd = lppd + lp;
        p_waic = p_waic + var;
        pointwise.push(lp - var);
    }
    let elpd = lppd - p_waic;
    let nf = T::from_usize_lossy(n.max(1));
    let mean_pw = elpd / nf;
    let var_pw = if n > 1 {
        pointwise.iter().map(|&v| (v - mean_pw) * (v - mean_pw)).sum::<T>() / T::from_usize_lossy(n - 1)
    } else {
        T::zero()
    };
    Ok(WaicEstimate {
        elpd,
        se: (nf * var_pw).sqrt(),
        lppd,
        p_waic,
        pointwise,
    })
}

/// Pointwise `log p(Y_i | φ, θ)` and `log p(Z_j | φ)` matrices over the
/// retained draws.
pub fn pointwise_loglik<T, M>(model: &M, draws: &PosteriorDraws<T>, ys: &[M::YObs], zs: &[M::ZObs]) -> (Vec<Vec<T>>, Vec<Vec<T>>)
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    let y = draws
        .phi
        .iter()
        .zip(&draws.theta)
        .map(|(p, t)| ys.iter().map(|y| model.y_loglik_pointwise(p, t, y)).collect())
        .collect();
    let z = draws.phi.iter().map(|p| zs.iter().map(|z| model.z_loglik_pointwise(p, z)).collect()).collect();
    (y, z)
}

/// `(1/S) Σ_s (x^(s) − truth)²`.
pub fn pmse<T: Scalar>(draws: &[T], truth: T) -> Result<T> {
    if draws.is_empty() {
        return Err(SmiError::TooFewObservations { min: 1, got: 0 });
    }
    Ok(draws.iter().map(|&x| (x - truth) * (x - truth)).sum::<T>() / T::from_usize_lossy(draws.len()))
}

/// How the matched δ moves as η increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    #[default]
    Decreasing,
    Increasing,
}

/// Monotone η → δ alignment of two utility curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaDeltaMatch<T> {
    pub eta: Vec<T>,
    pub delta: Vec<T>,
    /// `U_η(η_j) − U_δ(δ(η_j))`.
    pub residuals: Vec<T>,
    /// True where `U_η(η_j)` lies outside the range of the δ-curve.
    pub clamped: Vec<bool>,
}

impl<T: Scalar> EtaDeltaMatch<T> {
    /// Matched δ at an η on the grid, or by linear interpolation between
    /// neighbouring grid points.
    pub fn delta_at(&self, eta: T) -> Option<T> {
        if let Some(i) = self.eta.iter().position(|&e| e == eta) {
            return Some(self.delta[i]);
        }
        let i = self.eta.windows(2).position(|w| w[0] < eta && eta < w[1])?;
        let (e0, e1, d0, d1) = (self.eta[i], self.eta[i + 1], self.delta[i], self.delta[i + 1]);
        if d0.is_infinite() || d1.is_infinite() {
            return Some(if eta - e0 < e1 - eta { d0 } else { d1 });
        }
        Some(d0 + (d1 - d0) * (eta - e0) / (e1 - e0))
    }
}

/// Least-squares monotone map `g` from the η grid into the δ axis,
/// minimizing `Σ_j (U_η(η_j) − U_δ(g(η_j)))²` subject to `g` monotone in
/// `direction`. Candidates are the δ grid refined by linear interpolation
/// (`refine` points per finite segment); the optimum over candidates is
/// found exactly by dynamic programming.
pub fn eta_to_delta_matching<T: Scalar>(
    delta_curve: &UtilityCurve<T>,
    eta_curve: &UtilityCurve<T>,
    direction: MapDirection,
    refine: usize,
) -> Result<EtaDeltaMatch<T>> {
    if delta_curve.family != MetaFamily::Delta || eta_curve.family != MetaFamily::Eta {
        return Err(SmiError::InvalidConfig("expected a delta curve and an eta curve".into()));
    }
    let range = |v: &[T]| v.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (dlo, dhi) = range(&delta_curve.values);
    let (elo, ehi) = range(&eta_curve.values);
    if ehi < dlo || elo > dhi {
        return Err(SmiError::NonOverlappingRanges {
            ref_lo: dlo.to_f64_lossy(),
            ref_hi: dhi.to_f64_lossy(),
            other_lo: elo.to_f64_lossy(),
            other_hi: ehi.to_f64_lossy(),
        });
    }

    let refine = refine.max(1);
    let mut cand_d: Vec<T> = Vec::new();
    let mut cand_u: Vec<T> = Vec::new();
    let (dm, du) = (&delta_curve.meta, &delta_curve.values);
    for i in 0..dm.len() {
        cand_d.push(dm[i]);
        cand_u.push(du[i]);
        if i + 1 < dm.len() && dm[i + 1].is_finite() {
            for s in 1..refine {
                let f = T::from_usize_lossy(s) / T::from_usize_lossy(refine);
                cand_d.push(dm[i] + (dm[i + 1] - dm[i]) * f);
                cand_u.push(du[i] + (du[i + 1] - du[i]) * f);
            }
        }
    }
    if direction == MapDirection::Decreasing {
        cand_d.reverse();
        cand_u.reverse();
    }

    // cost[c] = min total error with the current η mapped to candidate c and
    // all earlier η's mapped to candidates <= c.
    let nc = cand_d.len();
    let targets = &eta_curve.values;
    let mut cost: Vec<T> = vec![T::zero(); nc];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(targets.len());
    for (j, &u) in targets.iter().enumerate() {
        let mut best_prev = (T::infinity(), 0usize);
        let mut next = vec![T::zero(); nc];
        let mut from = vec![0usize; nc];
        for c in 0..nc {
            if j > 0 && cost[c] < best_prev.0 {
                best_prev = (cost[c], c);
            }
            let prev = if j == 0 { T::zero() } else { best_prev.0 };
            let r = u - cand_u[c];
            next[c] = prev + r * r;
            from[c] = best_prev.1;
        }
        cost = next;
        back.push(from);
    }
    let mut c = optimum(&cost, Goal::Minimize);
    let mut picks = vec![0usize; targets.len()];
    for j in (0..targets.len()).rev() {
        picks[j] = c;
        c = back[j][c];
    }

    let delta: Vec<T> = picks.iter().map(|&c| cand_d[c]).collect();
    let residuals = picks.iter().zip(targets).map(|(&c, &u)| u - cand_u[c]).collect();
    let clamped = targets.iter().map(|&u| u < dlo || u > dhi).collect();
    Ok(EtaDeltaMatch {
        eta: eta_curve.meta.clone(),
        delta,
        residuals,
        clamped,
    })
}
