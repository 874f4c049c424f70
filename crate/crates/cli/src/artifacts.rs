//! Error classification, config hashing and table output.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use rumboost::indicators::write_table;
use rumboost::model_io::FORMAT_VERSION;
use rumboost::Error;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn data(message: impl Display) -> Self {
        Failure {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Spec { .. } | Error::Schema(_) | Error::InvalidArgument(_) | Error::Model(_) | Error::Format { .. } => 2,
            Error::Io { .. } | Error::Parse { .. } | Error::Validation(_) => 3,
            Error::Numerical(_) => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Reads a configuration file; failures are configuration errors.
pub fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

/// Collects everything that determines a run's output and hashes it.
#[derive(Default)]
pub struct ConfigHash {
    hasher: Sha256,
}

impl ConfigHash {
    pub fn new(command: &str) -> Self {
        let mut h = ConfigHash::default();
        h.text("command", command);
        h
    }

    pub fn text(&mut self, key: &str, value: &str) {
        // length prefixes keep field boundaries unambiguous
        for part in [key.as_bytes(), value.as_bytes()] {
            self.hasher.update((part.len() as u64).to_le_bytes());
            self.hasher.update(part);
        }
    }

    pub fn file(&mut self, key: &str, path: &Path) -> Result<(), Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
        self.hasher.update((key.len() as u64).to_le_bytes());
        self.hasher.update(key.as_bytes());
        self.hasher.update(Sha256::digest(&bytes));
        Ok(())
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

/// Output directory plus the provenance stamped on every artifact.
pub struct Outputs {
    pub dir: PathBuf,
    pub seed: u64,
    pub hash: String,
}

impl Outputs {
    pub fn create(dir: &Path, seed: u64, hash: String) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            seed,
            hash,
        })
    }

    pub fn comments(&self, title: &str) -> Vec<String> {
        vec![
            title.to_string(),
            format!("rumboost {} model-format {FORMAT_VERSION}", env!("CARGO_PKG_VERSION")),
            format!("seed {}", self.seed),
            format!("config {}", self.hash),
        ]
    }

    pub fn path(&self, name: &str) -> Result<PathBuf, Failure> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::config(format!("cannot create {}: {e}", parent.display())))?;
        }
        Ok(p)
    }

    pub fn table(&self, name: &str, title: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, Failure> {
        let path = self.path(name)?;
        let file = fs::File::create(&path).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
        write_table(std::io::BufWriter::new(file), &self.comments(title), header, rows)?;
        Ok(path)
    }
}

/// File-name-safe form of an alternative or variable name.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_field_sensitive() {
        let h = |a: &str, b: &str| {
            let mut c = ConfigHash::new("train");
            c.text("x", a);
            c.text("y", b);
            c.finish()
        };
        assert_eq!(h("1", "2"), h("1", "2"));
        assert_ne!(h("12", ""), h("1", "2"));
        assert_eq!(h("1", "2").len(), 64);
    }

    #[test]
    fn slug_replaces_separators() {
        assert_eq!(slug("pt/rail time"), "pt_rail_time");
    }

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::Numerical("x".into())).code, 4);
        assert_eq!(Failure::from(Error::Validation("x".into())).code, 3);
        assert_eq!(Failure::from(Error::Schema("x".into())).code, 2);
    }
}
