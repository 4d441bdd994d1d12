//! Content-addressed shard registry.
//!
//! Files are identified by the MD5 of their bytes, so the same content
//! under a new filename is still a duplicate.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use md5::{Digest, Md5};

use crate::error::{Error, Result};

/// MD5 of a file's contents.
pub fn file_digest(path: &Path) -> Result<[u8; 16]> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Md5::new();
    hasher.update(&bytes);
    Ok(hasher.finalize().into())
}

/// Lowercase hex rendering of a digest.
pub fn hex(digest: &[u8; 16]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest-keyed file set; registration order is preserved and duplicate
/// content is rejected.
#[derive(Debug, Default)]
pub struct FileRegistry {
    entries: Vec<(PathBuf, [u8; 16])>,
    index: HashMap<[u8; 16], usize>,
}

impl FileRegistry {
    /// Empty registry.
    pub fn new() -> Self {
        Self::default()
    }

    /// Hash `path` and insert it.
    pub fn register(&mut self, path: &Path) -> Result<[u8; 16]> {
        let digest = file_digest(path)?;
        self.insert(path, digest)?;
        Ok(digest)
    }

    /// Insert a path with an already-computed digest.
    pub fn insert(&mut self, path: &Path, digest: [u8; 16]) -> Result<()> {
        if let Some(&at) = self.index.get(&digest) {
            return Err(Error::DuplicateData {
                digest: hex(&digest),
                existing: self.entries[at].0.clone(),
                new: path.to_path_buf(),
            });
        }
        self.index.insert(digest, self.entries.len());
        self.entries.push((path.to_path_buf(), digest));
        Ok(())
    }

    /// The registered path for a digest, if any.
    pub fn path_of(&self, digest: &[u8; 16]) -> Option<&Path> {
        self.index.get(digest).map(|&at| self.entries[at].0.as_path())
    }

    /// All entries in registration order.
    pub fn entries(&self) -> &[(PathBuf, [u8; 16])] {
        &self.entries
    }

    /// Number of registered files.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when nothing is registered.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_content_based_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        std::fs::write(&a, b"same bytes").unwrap();
        std::fs::write(&b, b"same bytes").unwrap();
        assert_eq!(file_digest(&a).unwrap(), file_digest(&b).unwrap());
        // Fixed digest of the empty input, the classic MD5 constant.
        let e = dir.path().join("e.bin");
        std::fs::write(&e, b"").unwrap();
        assert_eq!(
            hex(&file_digest(&e).unwrap()),
            "d41d8cd98f00b204e9800998ecf8427e"
        );
    }

    #[test]
    fn re_registration_always_fails() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        std::fs::write(&a, b"payload").unwrap();
        std::fs::write(&b, b"payload").unwrap();
        let mut reg = FileRegistry::new();
        reg.register(&a).unwrap();
        match reg.register(&b) {
            Err(Error::DuplicateData { existing, new, .. }) => {
                assert!(existing.ends_with("a.bin"));
                assert!(new.ends_with("b.bin"));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
        assert_eq!(reg.len(), 1);
    }
}
