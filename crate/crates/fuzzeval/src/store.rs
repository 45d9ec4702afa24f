//! Campaign results on disk: one pretty-printed JSON file per trial plus
//! `manifest.json`.

use std::collections::BTreeSet;
use std::path::Path;

use fuzzeval_core::campaign::{CampaignConfig, CampaignResult, TrialKey};
use fuzzeval_core::fuzz::TrialRecord;
use fuzzeval_core::Error;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: CampaignConfig,
    pub fuzzer_a: String,
    pub fuzzer_b: String,
    /// Trial file names, sorted by trial key.
    pub trials: Vec<String>,
    /// False when the campaign aborted and only some trials were written.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Timing only; excluded from reproducibility comparisons.
    pub wall_seconds: f64,
}

pub fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_') { c } else { '_' })
        .collect()
}

pub fn trial_file_name(key: &TrialKey) -> String {
    format!(
        "{}__{}__{}__{:03}.json",
        sanitize_id(&key.fuzzer_id),
        sanitize_id(&key.target_id),
        sanitize_id(&key.seed_config_id),
        key.trial_index
    )
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::write(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes every trial and the manifest into `dir`, creating it if needed.
pub fn write_campaign(
    dir: &Path,
    config: &CampaignConfig,
    result: &CampaignResult,
    failure: Option<String>,
    wall_seconds: f64,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::write(dir, e))?;
    let mut names = Vec::with_capacity(result.len());
    let mut seen = BTreeSet::new();
    for (key, record) in &result.trials {
        let name = trial_file_name(key);
        if !seen.insert(name.clone()) {
            return Err(Error::Config(format!("ids of trial {key} collide with another trial's file name {name}")).into());
        }
        write_file(&dir.join(&name), &to_json(record))?;
        names.push(name);
    }
    let manifest = Manifest {
        config: config.clone(),
        fuzzer_a: config.fuzzer_a.id.clone(),
        fuzzer_b: config.fuzzer_b.id.clone(),
        trials: names,
        complete: failure.is_none(),
        failure,
        wall_seconds,
    };
    write_file(&dir.join(MANIFEST), &to_json(&manifest))?;
    Ok(manifest)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::read(path, e))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a results directory written by [`write_campaign`].
pub fn read_campaign(dir: &Path) -> Result<(Manifest, CampaignResult)> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let mut result = CampaignResult::default();
    for name in &manifest.trials {
        let path = dir.join(name);
        let record: TrialRecord = read_json(&path)?;
        record
            .check_invariants()
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        result.insert(record);
    }
    Ok((manifest, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        let key = TrialKey {
            fuzzer_id: "afl".into(),
            target_id: "external:/bin/x y".into(),
            seed_config_id: "empty".into(),
            trial_index: 7,
        };
        assert_eq!(trial_file_name(&key), "afl__external__bin_x_y__empty__007.json");
    }
}
