//! Transparent on-disk cache of distribution files, one per (N, n, stat).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigUint;
use zds::ExactDistribution;

use crate::output::{build_file, to_json, DistributionFile, SCHEMA_VERSION};
use crate::CliError;

pub fn cache_file_name(sample_size: u64, bins: u64, stat_tag: &str) -> String {
    format!("zds_N{sample_size}_n{bins}_{stat_tag}.json")
}

fn corrupt(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Cache { path: path.to_path_buf(), reason: reason.into() }
}

/// Loads a cached distribution. `Ok(None)` means absent or written by a
/// different schema version (recompute and overwrite); structural damage is
/// an error naming the file.
pub fn load(
    dir: &Path,
    sample_size: u64,
    bins: u64,
    stat_tag: &str,
) -> Result<Option<ExactDistribution>, CliError> {
    let path = dir.join(cache_file_name(sample_size, bins, stat_tag));
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(err) => return Err(CliError::Io { path, source: err }),
    };
    let file: DistributionFile = serde_json::from_str(&text)
        .map_err(|err| corrupt(&path, format!("not a distribution file: {err}")))?;
    if file.schema_version != SCHEMA_VERSION {
        return Ok(None);
    }
    if file.sample_size != sample_size || file.bins != bins || file.stat != stat_tag {
        return Err(corrupt(
            &path,
            format!(
                "header says N={}, n={}, stat={}, but the name promises N={}, n={}, stat={}",
                file.sample_size, file.bins, file.stat, sample_size, bins, stat_tag
            ),
        ));
    }
    let mut cells = BTreeMap::new();
    for entry in &file.entries {
        let count = BigUint::from_str(&entry.count)
            .map_err(|_| corrupt(&path, format!("count {:?} at s={} is not a decimal integer", entry.count, entry.s)))?;
        if cells.insert(entry.s, count).is_some() {
            return Err(corrupt(&path, format!("duplicate entry for s={}", entry.s)));
        }
    }
    ExactDistribution::from_cells(sample_size, bins, &cells)
        .map(Some)
        .map_err(|err| corrupt(&path, err.to_string()))
}

/// Writes the table atomically: a sibling temp file, then a rename.
pub fn store(
    dir: &Path,
    dist: &ExactDistribution,
    stat_tag: &str,
    chi2_stat: bool,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|err| CliError::Io { path: dir.to_path_buf(), source: err })?;
    let path = dir.join(cache_file_name(dist.sample_size(), dist.bins(), stat_tag));
    let temp = dir.join(format!(
        "{}.tmp{}",
        cache_file_name(dist.sample_size(), dist.bins(), stat_tag),
        std::process::id()
    ));
    let body = to_json(&build_file(dist, stat_tag, chi2_stat));
    fs::write(&temp, body).map_err(|err| CliError::Io { path: temp.clone(), source: err })?;
    fs::rename(&temp, &path).map_err(|err| CliError::Io { path: path.clone(), source: err })?;
    Ok(path)
}
