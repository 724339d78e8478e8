//! HPV study: nested MCMC over δ and η grids, WAIC-based ELPD_y and ELPD_z,
//! η ↔ δ matching, and (θ₁, θ₂) clouds.

use rayon::prelude::*;
use serde::Serialize;
use smi_core::models::HpvModel;
use smi_core::sampler::{run_nested_mcmc, PosteriorDraws};
use smi_core::selection::{
    delta_grid, eta_grid, eta_to_delta_matching, pointwise_loglik, waic_elpd, Goal, MapDirection, MetaFamily, UtilityCurve,
};
use smi_core::stats::bhattacharyya_distance;
use smi_core::{InfluenceSetting, KernelSpec, Setting};

use super::Summary;
use crate::config::{check_delta_grid, check_eta_grid, CountKernel, HpvSettings};
use crate::data::load_hpv;
use crate::error::CliError;
use crate::output::OutDir;

const ETA_STREAM: u64 = 10_000;
const EXTRA_STREAM: u64 = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct ChainRow {
    pub family: &'static str,
    pub meta: f64,
    pub setting: String,
    pub elpd_y: f64,
    pub se_y: f64,
    pub elpd_z: f64,
    pub se_z: f64,
    pub min_ess: f64,
    pub min_acceptance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchRow {
    pub eta: f64,
    pub delta: f64,
    pub residual: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CloudRow {
    pub posterior: String,
    pub theta_1: f64,
    pub theta_2: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Report<'a> {
    experiment: &'static str,
    seed: u64,
    settings: &'a HpvSettings,
    data_source: String,
    data_sha256: String,
    populations: usize,
    delta_argmax_elpd_y: f64,
    delta_argmax_elpd_z: f64,
    eta_argmax_elpd_y: f64,
    eta_argmax_elpd_z: f64,
    match_eta: f64,
    matched_delta: Option<f64>,
    bhattacharyya_bayes_cut: f64,
    chains: &'a [ChainRow],
}

struct Fitted {
    setting: Setting,
    row: ChainRow,
    draws: PosteriorDraws<f64>,
}

fn kernel(kind: CountKernel) -> KernelSpec<f64> {
    match kind {
        CountKernel::DiscreteUniform => KernelSpec::DiscreteUniform(1.0),
        CountKernel::ScaledTopHat => KernelSpec::ScaledTopHat(1.0),
    }
}

fn every_nth(draws: &PosteriorDraws<f64>, keep: usize) -> Vec<Vec<f64>> {
    let n = draws.theta.len();
    let step = n.div_ceil(keep.max(1)).max(1);
    draws.theta.iter().step_by(step).cloned().collect()
}

pub fn run(s: &HpvSettings, seed: u64, out: &OutDir) -> Result<Summary, CliError> {
    check_delta_grid(&s.delta_grid)?;
    check_eta_grid(&s.eta_grid)?;
    let (records, source, sha) = load_hpv(s.data.as_deref())?;
    let (model, ys, zs) = HpvModel::from_records(&records)?;
    let model = model.with_theta_prior_sd(s.theta_prior_sd);
    let base = kernel(s.kernel);

    let mut jobs: Vec<(&'static str, f64, Setting, u64)> = Vec::new();
    for (i, (d, st)) in s.delta_grid.iter().zip(delta_grid(&s.delta_grid, base)?).enumerate() {
        jobs.push(("delta", *d, st, i as u64));
    }
    for (j, (e, st)) in s.eta_grid.iter().zip(eta_grid(&s.eta_grid)?).enumerate() {
        jobs.push(("eta", *e, st, ETA_STREAM + j as u64));
    }
    // Bayes and Cut clouds come from the grids when they include the
    // endpoints, otherwise from extra chains.
    for (k, endpoint) in [InfluenceSetting::Bayes, InfluenceSetting::Cut].into_iter().enumerate() {
        if !jobs.iter().any(|j| j.2 == endpoint) {
            jobs.push(("extra", f64::NAN, endpoint, EXTRA_STREAM + k as u64));
        }
    }

    let fitted = jobs
        .par_iter()
        .map(|(family, meta, setting, stream)| {
            let draws = run_nested_mcmc(&model, setting, &ys, &zs, &s.mcmc(seed, *stream))?;
            let (ly, lz) = pointwise_loglik(&model, &draws, &ys, &zs);
            let wy = waic_elpd(&ly)?;
            let wz = waic_elpd(&lz)?;
            let row = ChainRow {
                family,
                meta: *meta,
                setting: setting.label(),
                elpd_y: wy.elpd,
                se_y: wy.se,
                elpd_z: wz.elpd,
                se_z: wz.se,
                min_ess: draws.min_ess(),
                min_acceptance: draws.acceptance.iter().map(|a| a.1).fold(f64::INFINITY, f64::min),
            };
            Ok(Fitted {
                setting: *setting,
                row,
                draws,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let family = |name: &str| -> Vec<&Fitted> { fitted.iter().filter(|f| f.row.family == name).collect() };
    let curve = |fam: MetaFamily, rows: &[&Fitted], y: bool| -> Result<UtilityCurve<f64>, CliError> {
        let grid: Vec<Setting> = match fam {
            MetaFamily::Delta => delta_grid(&s.delta_grid, base)?,
            MetaFamily::Eta => eta_grid(&s.eta_grid)?,
        };
        let (v, se) = rows
            .iter()
            .map(|f| if y { (f.row.elpd_y, f.row.se_y) } else { (f.row.elpd_z, f.row.se_z) })
            .unzip();
        Ok(UtilityCurve::new(fam, Goal::Maximize, grid, v, se)?)
    };
    let deltas = family("delta");
    let etas = family("eta");
    let dy = curve(MetaFamily::Delta, &deltas, true)?;
    let dz = curve(MetaFamily::Delta, &deltas, false)?;
    let ey = curve(MetaFamily::Eta, &etas, true)?;
    let ez = curve(MetaFamily::Eta, &etas, false)?;
    for (name, c) in [
        ("elpd_y_delta.csv", &dy),
        ("elpd_z_delta.csv", &dz),
        ("elpd_y_eta.csv", &ey),
        ("elpd_z_eta.csv", &ez),
    ] {
        out.write_with(name, |w| c.write_csv(w))?;
    }
    let rows: Vec<&ChainRow> = fitted.iter().map(|f| &f.row).collect();
    out.write_csv("chains.csv", &rows)?;

    let matching = eta_to_delta_matching(&dy, &ey, MapDirection::Decreasing, s.match_refine)?;
    let match_rows: Vec<MatchRow> = (0..matching.eta.len())
        .map(|i| MatchRow {
            eta: matching.eta[i],
            delta: matching.delta[i],
            residual: matching.residuals[i],
            clamped: matching.clamped[i],
        })
        .collect();
    out.write_csv("matching.csv", &match_rows)?;
    let matched_delta = matching.delta_at(s.match_eta);

    let find = |target: &Setting| fitted.iter().find(|f| &f.setting == target);
    let bayes = find(&InfluenceSetting::Bayes).expect("bayes chain scheduled");
    let cut = find(&InfluenceSetting::Cut).expect("cut chain scheduled");
    let mut clouds: Vec<(String, &PosteriorDraws<f64>)> = vec![("bayes".into(), &bayes.draws), ("cut".into(), &cut.draws)];
    if let Some(f) = etas.iter().find(|f| f.row.meta == s.match_eta) {
        clouds.push((format!("eta={}", s.match_eta), &f.draws));
    }
    if let Some(md) = matched_delta {
        let nearest = deltas
            .iter()
            .min_by(|a, b| (a.row.meta - md).abs().total_cmp(&(b.row.meta - md).abs()))
            .expect("delta grid is non-empty");
        clouds.push((format!("delta={}", nearest.row.meta), &nearest.draws));
    }
    let mut cloud_rows = Vec::new();
    for (label, d) in &clouds {
        for t in every_nth(d, s.cloud_draws) {
            cloud_rows.push(CloudRow {
                posterior: label.clone(),
                theta_1: t[0],
                theta_2: t[1],
            });
        }
    }
    out.write_csv("theta_clouds.csv", &cloud_rows)?;
    let bhatt = bhattacharyya_distance(&bayes.draws.theta, &cut.draws.theta)?;

    let chains: Vec<ChainRow> = rows.into_iter().cloned().collect();
    let report = Report {
        experiment: "hpv",
        seed,
        settings: s,
        data_source: source,
        data_sha256: sha,
        populations: records.len(),
        delta_argmax_elpd_y: dy.best_meta(),
        delta_argmax_elpd_z: dz.best_meta(),
        eta_argmax_elpd_y: ey.best_meta(),
        eta_argmax_elpd_z: ez.best_meta(),
        match_eta: s.match_eta,
        matched_delta,
        bhattacharyya_bayes_cut: bhatt,
        chains: &chains,
    };
    out.write_json("report.json", &report)?;
    Ok(Summary {
        lines: vec![
            format!("chains: {}", fitted.len()),
            format!("argmax ELPD_y over delta: {}", report.delta_argmax_elpd_y),
            format!("argmax ELPD_z over delta: {}", report.delta_argmax_elpd_z),
            format!(
                "eta={} matches delta={}",
                s.match_eta,
                matched_delta.map_or("none".into(), |d| d.to_string())
            ),
            format!("Bhattacharyya(bayes, cut) on theta: {bhatt:.3}"),
        ],
        failed: None,
    })
}
