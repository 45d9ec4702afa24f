use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One seed-corpus choice in a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub id: String,
    #[serde(flatten)]
    pub source: SeedSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeedSource {
    /// A single zero-length input.
    Empty,
    /// Inline byte sequences (base64 in JSON).
    Literal {
        #[serde(with = "super::b64::seq")]
        seeds: Vec<Vec<u8>>,
    },
    /// Files read at campaign start.
    Files { paths: Vec<String> },
}

impl SeedConfig {
    pub fn empty(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: SeedSource::Empty,
        }
    }

    pub fn literal(id: impl Into<String>, seeds: Vec<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            source: SeedSource::Literal { seeds },
        }
    }

    pub fn files(id: impl Into<String>, paths: Vec<String>) -> Self {
        Self {
            id: id.into(),
            source: SeedSource::Files { paths },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::config("seed config id must not be empty"));
        }
        match &self.source {
            SeedSource::Literal { seeds } if seeds.is_empty() => Err(Error::config(format!(
                "seed config {}: literal corpus is empty",
                self.id
            ))),
            SeedSource::Files { paths } if paths.is_empty() => Err(Error::config(format!(
                "seed config {}: no files listed",
                self.id
            ))),
            _ => Ok(()),
        }
    }
}

/// Builds the initial corpus. `read_file` resolves `files` entries; it
/// should return `Error::Config` naming the path when a file is missing.
pub fn init_seed_corpus<F>(config: &SeedConfig, mut read_file: F) -> Result<Vec<Vec<u8>>>
where
    F: FnMut(&str) -> Result<Vec<u8>>,
{
    config.validate()?;
    match &config.source {
        SeedSource::Empty => Ok(vec![Vec::new()]),
        SeedSource::Literal { seeds } => Ok(seeds.clone()),
        SeedSource::Files { paths } => paths.iter().map(|p| read_file(p)).collect(),
    }
}

/// Corpus for configurations that need no file access.
pub fn init_inline_seed_corpus(config: &SeedConfig) -> Result<Vec<Vec<u8>>> {
    init_seed_corpus(config, |p| {
        Err(Error::config(format!("seed file {p}: no file system available")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_one_zero_byte_seed() {
        let seeds = init_inline_seed_corpus(&SeedConfig::empty("e")).unwrap();
        assert_eq!(seeds, vec![Vec::<u8>::new()]);
    }

    #[test]
    fn literal_seeds_pass_through_in_order() {
        let cfg = SeedConfig::literal("l", vec![b"a".to_vec(), b"bb".to_vec()]);
        assert_eq!(init_inline_seed_corpus(&cfg).unwrap(), vec![b"a".to_vec(), b"bb".to_vec()]);
    }

    #[test]
    fn file_errors_name_the_path() {
        let cfg = SeedConfig::files("f", vec!["/nope/seed.bin".into()]);
        let err = init_inline_seed_corpus(&cfg).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("/nope/seed.bin")));
    }

    #[test]
    fn json_shape() {
        let cfg = SeedConfig::literal("l", vec![b"hi".to_vec()]);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(json, r#"{"id":"l","kind":"literal","seeds":["aGk="]}"#);
        let back: SeedConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let e: SeedConfig = serde_json::from_str(r#"{"id":"e","kind":"empty"}"#).unwrap();
        assert_eq!(e, SeedConfig::empty("e"));
    }
}
