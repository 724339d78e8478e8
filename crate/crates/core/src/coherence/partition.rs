use serde::{Deserialize, Serialize};

use super::model::DiscreteData;
use crate::error::{Result, SmiError};

/// Largest total number of observations the exhaustive enumeration accepts.
pub const MAX_PARTITION_OBS: usize = 5;

/// Ordered blocks `(Y^(k), Z^(k))`, possibly empty. `labels[i]` is the
/// block of observation `i`, with the Y's listed before the Z's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPartition {
    pub labels: Vec<usize>,
    pub blocks: Vec<DiscreteData>,
}

impl DataPartition {
    pub fn from_labels(data: &DiscreteData, labels: Vec<usize>, k: usize) -> Self {
        let mut blocks = vec![DiscreteData::default(); k];
        let ny = data.ys.len();
        for (i, &b) in labels.iter().enumerate() {
            if i < ny {
                blocks[b].ys.push(data.ys[i]);
            } else {
                blocks[b].zs.push(data.zs[i - ny]);
            }
        }
        Self { labels, blocks }
    }

    /// Blocks `1..=k` merged in order.
    pub fn cumulative(&self, k: usize) -> DiscreteData {
        let mut out = DiscreteData::default();
        for b in &self.blocks[..k] {
            out.ys.extend_from_slice(&b.ys);
            out.zs.extend_from_slice(&b.zs);
        }
        out
    }
}

/// Every assignment of the observations to `k` ordered blocks (`k^N` of them).
pub fn partitions(data: &DiscreteData, k: usize) -> Result<Vec<DataPartition>> {
    let n = data.len();
    if n > MAX_PARTITION_OBS {
        return Err(SmiError::InvalidConfig(format!(
            "exhaustive partitions are capped at {MAX_PARTITION_OBS} observations, got {n}"
        )));
    }
    if k == 0 {
        return Err(SmiError::InvalidConfig("need at least one block".into()));
    }
    let count = k.pow(n as u32);
    Ok((0..count)
        .map(|mut code| {
            let labels = (0..n)
                .map(|_| {
                    let b = code % k;
                    code /= k;
                    b
                })
                .collect();
            DataPartition::from_labels(data, labels, k)
        })
        .collect())
}

/// All partitions with `2..=max_blocks` blocks.
pub fn partitions_up_to(data: &DiscreteData, max_blocks: usize) -> Result<Vec<DataPartition>> {
    let mut out = Vec::new();
    for k in 2..=max_blocks {
        out.extend(partitions(data, k)?);
    }
    Ok(out)
}
