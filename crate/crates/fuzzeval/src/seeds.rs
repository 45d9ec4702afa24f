use fuzzeval_core::fuzz::{init_seed_corpus, SeedConfig};
use fuzzeval_core::{Error, Result};

/// Builds the seed corpus, reading `files` seeds from disk.
pub fn load_seed_corpus(config: &SeedConfig) -> Result<Vec<Vec<u8>>> {
    init_seed_corpus(config, |path| {
        std::fs::read(path).map_err(|e| Error::Config(format!("seed config {}: cannot read {path}: {e}", config.id)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_files_and_names_missing_ones() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seed.bin");
        std::fs::write(&p, b"hello").unwrap();
        let ok = SeedConfig::files("disk", vec![p.display().to_string()]);
        assert_eq!(load_seed_corpus(&ok).unwrap(), vec![b"hello".to_vec()]);

        let missing = dir.path().join("nope.bin").display().to_string();
        let bad = SeedConfig::files("disk", vec![missing.clone()]);
        match load_seed_corpus(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains(&missing)),
            other => panic!("{other:?}"),
        }
        assert_eq!(load_seed_corpus(&SeedConfig::empty("e")).unwrap(), vec![Vec::<u8>::new()]);
    }
}
