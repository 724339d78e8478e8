use serde::{Deserialize, Serialize};

use super::model::{DiscreteData, DiscreteModel};
use super::partition::DataPartition;
use super::table::ParamTable;
use crate::error::{Result, SmiError};
use crate::model::InfluenceSetting;
use crate::scalar::{log_sum_exp, Scalar};

/// How a belief update turns a loss table and a reference prior into a
/// distribution. `Gibbs` is `∝ exp(−l)·q`; the other two are deliberately
/// mismatched counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateRule<T> {
    Gibbs,
    /// `∝ exp(−w·l)·q`.
    TemperedGibbs { weight: T },
    /// `∝ exp(−l)·q^w`.
    PriorTempered { weight: T },
}

impl<T: Scalar> UpdateRule<T> {
    pub fn apply(&self, loss: &ParamTable<T>, reference: &ParamTable<T>) -> Result<ParamTable<T>> {
        if !loss.same_shape(reference) {
            return Err(SmiError::DimensionMismatch("loss and reference tables differ in shape".into()));
        }
        let (lw, qw) = match *self {
            Self::Gibbs => (T::one(), T::one()),
            Self::TemperedGibbs { weight } => (weight, T::one()),
            Self::PriorTempered { weight } => (T::one(), weight),
        };
        let log_w = loss
            .values
            .iter()
            .zip(&reference.values)
            .map(|(&l, &q)| {
                if l == T::infinity() || q == T::zero() {
                    T::neg_infinity()
                } else {
                    -lw * l + qw * q.ln()
                }
            })
            .collect();
        ParamTable::from_log_weights(ParamTable {
            values: log_w,
            ..loss.clone()
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Gibbs => "gibbs".into(),
            Self::TemperedGibbs { weight } => format!("tempered_gibbs(w={weight})"),
            Self::PriorTempered { weight } => format!("prior_tempered(w={weight})"),
        }
    }
}

/// A belief update `ψ^(q)`: the loss it is built from and how it is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefUpdate<T> {
    pub setting: InfluenceSetting<T>,
    pub rule: UpdateRule<T>,
}

impl<T: Scalar> BeliefUpdate<T> {
    pub fn gibbs(setting: InfluenceSetting<T>) -> Self {
        Self {
            setting,
            rule: UpdateRule::Gibbs,
        }
    }

    pub fn apply(&self, model: &DiscreteModel<T>, data: &DiscreteData, reference: &ParamTable<T>) -> Result<ParamTable<T>> {
        self.rule.apply(&loss_table(model, &self.setting, data, reference)?, reference)
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.setting.label(), self.rule.label())
    }
}

/// Size of the θ̃ axis for a setting.
pub fn tilde_len<T: Scalar>(model: &DiscreteModel<T>, setting: &InfluenceSetting<T>) -> usize {
    if setting.uses_theta_tilde() {
        model.n_theta()
    } else {
        1
    }
}

/// `π₀(φ) π₀(θ̃|φ) π₀(θ|φ)`, or `π₀(φ, θ)` when `n_tilde = 1`.
pub fn prior_table<T: Scalar>(model: &DiscreteModel<T>, n_tilde: usize) -> ParamTable<T> {
    ParamTable::from_fn(model.n_phi(), n_tilde, model.n_theta(), |p, t, th| {
        let lp = model.prior[p][th].ln();
        if n_tilde == 1 {
            lp.exp()
        } else {
            (lp + model.log_prior_theta_given_phi(p, t)).exp()
        }
    })
}

pub fn prior_for<T: Scalar>(model: &DiscreteModel<T>, setting: &InfluenceSetting<T>) -> ParamTable<T> {
    prior_table(model, tilde_len(model, setting))
}

/// `log p_δ(Y | φ, θ̃) = Σ_i log Σ_ỹ K_δ(y_i, ỹ) p(ỹ | φ, θ̃)` over outcome
/// indices.
fn log_smoothed_y<T: Scalar>(model: &DiscreteModel<T>, setting: &InfluenceSetting<T>, phi: usize, theta: usize, ys: &[usize]) -> T {
    let InfluenceSetting::Delta { kernel } = setting else {
        return model.log_p_y(phi, theta, ys);
    };
    let row = &model.p_y[phi][theta];
    ys.iter()
        .map(|&y| {
            let terms: Vec<T> = row
                .iter()
                .enumerate()
                .map(|(yt, &p)| kernel.log_density(T::from_usize_lossy(y), T::from_usize_lossy(yt)) + p.ln())
                .collect();
            log_sum_exp(&terms)
        })
        .sum()
}

/// `log p_q(Y | φ) = log Σ_θ p(Y | φ, θ) q(θ | φ)` for every φ.
fn log_marginal_y<T: Scalar>(model: &DiscreteModel<T>, ys: &[usize], log_q_theta: &[Vec<T>]) -> Vec<T> {
    (0..model.n_phi())
        .map(|p| {
            if ys.is_empty() {
                return T::zero();
            }
            let terms: Vec<T> = (0..model.n_theta()).map(|th| model.log_p_y(p, th, ys) + log_q_theta[p][th]).collect();
            log_sum_exp(&terms)
        })
        .collect()
}

/// Loss `l(φ, θ̃, θ; Y, Z, q)` for every grid point. The reference `q`
/// enters through `p_q(Y|φ)` and must have the setting's shape.
pub fn loss_table<T: Scalar>(
    model: &DiscreteModel<T>,
    setting: &InfluenceSetting<T>,
    data: &DiscreteData,
    reference: &ParamTable<T>,
) -> Result<ParamTable<T>> {
    let n_tilde = tilde_len(model, setting);
    if (reference.n_phi, reference.n_tilde, reference.n_theta) != (model.n_phi(), n_tilde, model.n_theta()) {
        return Err(SmiError::DimensionMismatch(format!(
            "reference table has shape {}x{}x{}, setting {} needs {}x{}x{}",
            reference.n_phi,
            reference.n_tilde,
            reference.n_theta,
            setting.label(),
            model.n_phi(),
            n_tilde,
            model.n_theta()
        )));
    }
    let needs_marginal = !matches!(setting, InfluenceSetting::Bayes);
    let log_my = if needs_marginal {
        log_marginal_y(model, &data.ys, &reference.log_theta_given_phi()?)
    } else {
        vec![T::zero(); model.n_phi()]
    };
    let lz: Vec<T> = (0..model.n_phi()).map(|p| model.log_p_z(p, &data.zs)).collect();
    let values = ParamTable::from_fn(model.n_phi(), n_tilde, model.n_theta(), |p, t, th| {
        let lb = -lz[p] - model.log_p_y(p, th, &data.ys);
        let l = match *setting {
            InfluenceSetting::Bayes => lb,
            InfluenceSetting::Cut => lb + log_my[p],
            InfluenceSetting::Gamma { gamma } => lb + (T::one() - gamma) * log_my[p],
            InfluenceSetting::Eta { eta } => {
                let ly = model.log_p_y(p, t, &data.ys);
                let powered = if eta == T::zero() { T::zero() } else { eta * ly };
                lb - powered + log_my[p]
            }
            InfluenceSetting::Delta { .. } => lb - log_smoothed_y(model, setting, p, t, &data.ys) + log_my[p],
        };
        if l.is_nan() {
            T::infinity()
        } else {
            l
        }
    });
    Ok(values)
}

/// Candidate posterior computed directly from its marginal form
/// `π(φ) p(Z|φ) w(φ, θ̃) π(θ | Y, φ)` by full summation.
pub fn enumerate_posterior<T: Scalar>(model: &DiscreteModel<T>, setting: &InfluenceSetting<T>, data: &DiscreteData) -> Result<ParamTable<T>> {
    let n_tilde = tilde_len(model, setting);
    let prior_theta: Vec<Vec<T>> = (0..model.n_phi())
        .map(|p| (0..model.n_theta()).map(|th| model.log_prior_theta_given_phi(p, th)).collect())
        .collect();
    let log_my = log_marginal_y(model, &data.ys, &prior_theta);
    let log_w = ParamTable::from_fn(model.n_phi(), n_tilde, model.n_theta(), |p, t, th| {
        let base = model.log_prior_phi(p) + model.log_p_z(p, &data.zs);
        let analysis = prior_theta[p][th] + model.log_p_y(p, th, &data.ys) - log_my[p];
        let imputation = match *setting {
            InfluenceSetting::Bayes => log_my[p],
            InfluenceSetting::Cut => T::zero(),
            InfluenceSetting::Gamma { gamma } => gamma * log_my[p],
            InfluenceSetting::Eta { eta } => {
                let ly = model.log_p_y(p, t, &data.ys);
                prior_theta[p][t] + if eta == T::zero() { T::zero() } else { eta * ly }
            }
            InfluenceSetting::Delta { .. } => prior_theta[p][t] + log_smoothed_y(model, setting, p, t, &data.ys),
        };
        let v = base + imputation + analysis;
        if v.is_nan() {
            T::neg_infinity()
        } else {
            v
        }
    });
    ParamTable::from_log_weights(log_w)
}

/// Largest deviation found by a check and the partition that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome<T> {
    pub max_deviation: T,
    pub witness: Option<Vec<usize>>,
}

impl<T: Scalar> CheckOutcome<T> {
    fn new() -> Self {
        Self {
            max_deviation: T::zero(),
            witness: None,
        }
    }

    fn observe(&mut self, dev: T, partition: &DataPartition) {
        let dev = if dev.is_nan() { T::infinity() } else { dev };
        if self.witness.is_none() || dev > self.max_deviation {
            self.max_deviation = dev;
            self.witness = Some(partition.labels.clone());
        }
    }
}

/// Max over partitions and grid points of `|l(Y, Z) − Σ_k l(Y^(k), Z^(k))|`,
/// every loss evaluated against `π₀`.
pub fn check_additivity<T: Scalar>(
    model: &DiscreteModel<T>,
    setting: &InfluenceSetting<T>,
    data: &DiscreteData,
    partitions: &[DataPartition],
) -> Result<CheckOutcome<T>> {
    let prior = prior_for(model, setting);
    let total = loss_table(model, setting, data, &prior)?;
    let mut out = CheckOutcome::new();
    for part in partitions {
        let mut acc = ParamTable::from_fn(total.n_phi, total.n_tilde, total.n_theta, |_, _, _| T::zero());
        for block in &part.blocks {
            let l = loss_table(model, setting, block, &prior)?;
            add_into(&mut acc, &l);
        }
        out.observe(total.max_abs_diff(&acc)?, part);
    }
    Ok(out)
}

/// Def. of prequential additivity: block `k` is scored against
/// `q̃_{k−1} = ψ(l(Y^(1:k−1), Z^(1:k−1), π₀), π₀)` and the block losses are
/// compared with the one-shot loss.
pub fn check_prequential_additivity<T: Scalar>(
    model: &DiscreteModel<T>,
    loss: &InfluenceSetting<T>,
    update: &BeliefUpdate<T>,
    data: &DiscreteData,
    partitions: &[DataPartition],
) -> Result<CheckOutcome<T>> {
    if tilde_len(model, loss) != tilde_len(model, &update.setting) {
        return Err(SmiError::DimensionMismatch(format!(
            "loss {} and update {} live on different parameter spaces",
            loss.label(),
            update.label()
        )));
    }
    let prior = prior_for(model, loss);
    let total = loss_table(model, loss, data, &prior)?;
    let mut out = CheckOutcome::new();
    for part in partitions {
        let mut acc = ParamTable::from_fn(total.n_phi, total.n_tilde, total.n_theta, |_, _, _| T::zero());
        let mut q = prior.clone();
        for k in 0..part.blocks.len() {
            add_into(&mut acc, &loss_table(model, loss, &part.blocks[k], &q)?);
            if k + 1 < part.blocks.len() {
                q = update.apply(model, &part.cumulative(k + 1), &prior)?;
            }
        }
        out.observe(total.max_abs_diff(&acc)?, part);
    }
    Ok(out)
}

/// Def. of order-coherence: total-variation distance between the one-shot
/// update and the two-stage update through `q̃₁`, over the full table.
pub fn check_order_coherence<T: Scalar>(
    model: &DiscreteModel<T>,
    update: &BeliefUpdate<T>,
    data: &DiscreteData,
    partitions: &[DataPartition],
) -> Result<CheckOutcome<T>> {
    let prior = prior_for(model, &update.setting);
    let one_shot = update.apply(model, data, &prior)?;
    let mut out = CheckOutcome::new();
    for part in partitions {
        if part.blocks.len() != 2 {
            return Err(SmiError::InvalidConfig("order-coherence needs two-block partitions".into()));
        }
        let q1 = update.apply(model, &part.blocks[0], &prior)?;
        let two_stage = update.apply(model, &part.blocks[1], &q1)?;
        out.observe(one_shot.total_variation(&two_stage)?, part);
    }
    Ok(out)
}

fn add_into<T: Scalar>(acc: &mut ParamTable<T>, l: &ParamTable<T>) {
    for (a, &b) in acc.values.iter_mut().zip(&l.values) {
        *a = *a + b;
    }
}
