use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// Train/test partition of acquisition volumes. B-scans of one volume never
/// end up on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_volumes: Vec<String>,
    pub test_volumes: Vec<String>,
    pub fraction_train: f64,
}

/// Shuffles the volume ids with `seed` and puts `round(fraction * n)` of them
/// into the training set.
pub fn split_by_volume(volumes: &[String], fraction_train: f64, seed: u64) -> Result<DatasetSplit> {
    if volumes.len() < 2 {
        return Err(DataError::Dataset(format!(
            "need at least 2 volumes to split, got {}",
            volumes.len()
        )));
    }
    if !(fraction_train > 0.0 && fraction_train < 1.0) {
        return Err(DataError::Config(format!(
            "train fraction must lie in (0, 1), got {fraction_train}"
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = volumes.iter().find(|v| !seen.insert(v.as_str())) {
        return Err(DataError::Dataset(format!("duplicate volume id {dup:?}")));
    }
    let n_train = (fraction_train * volumes.len() as f64).round() as usize;
    if n_train == 0 || n_train == volumes.len() {
        return Err(DataError::Dataset(format!(
            "fraction {fraction_train} of {} volumes leaves one side empty",
            volumes.len()
        )));
    }
    // Sort first so the result does not depend on the caller's ordering.
    let mut ids = volumes.to_vec();
    ids.sort();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_volumes = ids.split_off(n_train);
    Ok(DatasetSplit {
        train_volumes: ids,
        test_volumes,
        fraction_train,
    })
}

/// Reads a line-delimited list of volume ids; blank lines are skipped.
pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn write_id_list(path: impl AsRef<Path>, ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut text = ids.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}
