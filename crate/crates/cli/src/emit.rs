use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files into one directory and remembers what it wrote.
pub struct Emitter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Emitter {
    /// The directory is created on the first write.
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.artifacts.push(Artifact {
            file: name.to_string(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents)),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// `manifest.json` covering every file written so far.
    pub fn finish<C: Serialize>(mut self, config: &C) -> io::Result<Vec<Artifact>> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            config: &'a C,
            artifacts: &'a [Artifact],
        }
        let artifacts = std::mem::take(&mut self.artifacts);
        self.write_json(
            "manifest.json",
            &Manifest {
                config,
                artifacts: &artifacts,
            },
        )?;
        Ok(artifacts)
    }
}
