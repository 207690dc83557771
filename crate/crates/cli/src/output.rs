// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub fn open(path: &Path) -> Result<impl BufRead> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// An output directory for one run.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn new(path: &Path) -> Result<Self> {
        fs::create_dir_all(path)
            .with_context(|| format!("cannot create directory {}", path.display()))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    /// Creates `name`, lets `f` fill it and flushes it.
    pub fn write<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let mut w = create(&path)?;
        f(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

/// `key=value` echo of a run's configuration.
pub struct Manifest(Vec<(String, String)>);

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest(Vec::new());
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn opt<T: Display>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        match value {
            Some(v) => self.set(key, v),
            None => self.set(key, "-"),
        }
    }

    pub fn write_to(&self, dir: &OutDir) -> Result<()> {
        dir.write("manifest.txt", |w| {
            for (k, v) in &self.0 {
                writeln!(w, "{k}={v}")?;
            }
            Ok(())
        })
    }
}
