//! Exhaustive checks of additivity, prequential additivity and
//! order-coherence on small discrete two-module models.

mod checks;
mod model;
mod partition;
mod suite;
mod table;

pub use checks::{
    check_additivity, check_order_coherence, check_prequential_additivity, enumerate_posterior, loss_table,
    prior_for, prior_table, tilde_len, BeliefUpdate, CheckOutcome, UpdateRule,
};
pub use model::{DiscreteData, DiscreteModel};
pub use partition::{partitions, partitions_up_to, DataPartition, MAX_PARTITION_OBS};
pub use suite::{canned_model, run_suite, CheckRecord, Expectation, SuiteConfig, SuiteReport};
pub use table::ParamTable;
