//! Optional on-disk verdict cache keyed by the SHA-256 of the prompt.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::http::{ClientError, CompletionClient};

/// Wraps a completion client; replies are stored as one file per prompt
/// hash. Cache I/O failures fall through to the inner client.
pub struct CachedClient<C> {
    inner: C,
    dir: PathBuf,
}

impl<C: CompletionClient> CachedClient<C> {
    pub fn new(inner: C, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CachedClient { inner, dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, prompt: &str) -> PathBuf {
        let digest = Sha256::digest(prompt.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(hex)
    }
}

impl<C: CompletionClient> CompletionClient for CachedClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let path = self.path_for(prompt);
        if let Ok(hit) = fs::read_to_string(&path) {
            return Ok(hit);
        }
        let reply = self.inner.complete(prompt)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let stored = fs::File::create(&tmp)
            .and_then(|mut f| f.write_all(reply.as_bytes()))
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = stored {
            tracing::warn!(path = %path.display(), error = %e, "could not write verdict cache entry");
            let _ = fs::remove_file(&tmp);
        }
        Ok(reply)
    }
}
