pub mod biased;
pub mod coherence;
pub mod hpv;
pub mod regression;

/// Stream for posterior samples drawn outside the replicate streams.
pub(crate) const SAMPLE_STREAM: u64 = 1 << 40;

/// What a run prints on completion; `failed` carries the reason when a
/// check did not hold.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub lines: Vec<String>,
    pub failed: Option<String>,
}
