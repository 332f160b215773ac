//! On-disk layout: `<root>/<hn|ln>/<volume_id>/<slice_index>.png`.

use std::path::{Path, PathBuf};

use crate::bscan::{BScan, Domain};
use crate::error::{DataError, Result};
use crate::io::{load_bscan, save_bscan, BitDepth};

pub fn slice_path(root: &Path, domain: Domain, volume: &str, slice: usize) -> PathBuf {
    root.join(domain.dir_name()).join(volume).join(format!("{slice}.png"))
}

/// Sorted volume ids present for `domain`.
pub fn list_volumes(root: &Path, domain: Domain) -> Result<Vec<String>> {
    let dir = root.join(domain.dir_name());
    let entries = std::fs::read_dir(&dir).map_err(|e| DataError::io(&dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| DataError::io(&dir, e))?;
        if entry.path().is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

/// Slice indices and paths of one volume, ordered by index.
pub fn list_slices(root: &Path, domain: Domain, volume: &str) -> Result<Vec<(usize, PathBuf)>> {
    let dir = root.join(domain.dir_name()).join(volume);
    let entries = std::fs::read_dir(&dir).map_err(|e| DataError::io(&dir, e))?;
    let mut slices = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| DataError::io(&dir, e))?.path();
        let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let index = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok());
        match (is_png, index) {
            (true, Some(i)) => slices.push((i, path)),
            (true, None) => {
                return Err(DataError::Dataset(format!(
                    "{}: slice file name is not an integer index",
                    path.display()
                )))
            }
            _ => {}
        }
    }
    slices.sort_by_key(|(i, _)| *i);
    Ok(slices)
}

pub fn load_volume(root: &Path, domain: Domain, volume: &str) -> Result<Vec<BScan>> {
    list_slices(root, domain, volume)?
        .into_iter()
        .map(|(i, p)| Ok(load_bscan(&p, domain)?.with_source_id(format!("{volume}/{i}"))))
        .collect()
}

/// Loads every slice of the given volumes, in volume then slice order.
pub fn load_volumes(root: &Path, domain: Domain, volumes: &[String]) -> Result<Vec<BScan>> {
    let mut out = Vec::new();
    for v in volumes {
        out.extend(load_volume(root, domain, v)?);
    }
    Ok(out)
}

pub fn write_slice(root: &Path, domain: Domain, volume: &str, slice: usize, img: &BScan) -> Result<PathBuf> {
    let path = slice_path(root, domain, volume, slice);
    save_bscan(&path, img, BitDepth::Sixteen)?;
    Ok(path)
}
