use std::fs;
use std::path::Path;

use anyhow::Context;
use sha2::{Digest, Sha256};

/// Content hash of a dataset: SHA-256 over the named files in the given
/// order, each tagged with its name so renames change the digest.
pub fn digest_files(dir: &Path, names: &[&str]) -> anyhow::Result<String> {
    let mut hasher = Sha256::new();
    for name in names {
        let path = dir.join(name);
        let bytes =
            fs::read(&path).with_context(|| format!("reading {} for digest", path.display()))?;
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(&bytes);
        hasher.update([0u8]);
    }
    let out = hasher.finalize();
    Ok(out.iter().map(|b| format!("{b:02x}")).collect())
}
