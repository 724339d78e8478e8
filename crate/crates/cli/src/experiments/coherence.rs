//! Coherence report over randomized discrete models.

use smi_core::coherence::run_suite;

use super::Summary;
use crate::config::{check_replicates, CoherenceSettings};
use crate::error::CliError;
use crate::output::OutDir;

pub fn run(s: &CoherenceSettings, seed: u64, out: &OutDir) -> Result<Summary, CliError> {
    check_replicates(s.models, "models")?;
    let cfg = s.suite(seed);
    cfg.validate()?;
    let report = run_suite(&cfg)?;
    out.write_json("report.json", &report)?;
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for r in &report.records {
        lines.push(format!(
            "{:<5} {:<24} {:<18} {:<22} {:.3e}",
            if r.passed { "ok" } else { "FAIL" },
            r.check,
            r.loss,
            r.update,
            r.max_deviation
        ));
        if !r.passed {
            bad.push(format!("{} / {} / {}", r.check, r.loss, r.update));
        }
    }
    Ok(Summary {
        lines,
        failed: (!report.passed).then(|| bad.join("; ")),
    })
}
