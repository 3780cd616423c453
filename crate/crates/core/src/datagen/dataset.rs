use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generate::GeneratorSpec;
use crate::error::{Error, Result};
use crate::nlops::{Grid1D, XSpec};
use crate::textio::{parse_matrix_csv, write_matrix_csv};

pub const FORMAT_VERSION: u32 = 1;

/// `N` sample pairs on the free nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: Grid1D,
    pub xspec: XSpec,
    pub generator: GeneratorSpec,
    pub seed: u64,
    n_rows: usize,
    n_cols: usize,
    u: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format_version: u32,
    generator: GeneratorSpec,
    seed: u64,
    n_samples: usize,
    grid: Grid1D,
    xspec: XSpec,
    u_sha256: String,
    f_sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Dataset {
    pub fn new(
        grid: Grid1D,
        xspec: XSpec,
        generator: GeneratorSpec,
        seed: u64,
        u_rows: Vec<Vec<f64>>,
        f_rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_cols = grid.n_free();
        if u_rows.len() != f_rows.len() {
            return Err(Error::Shape(format!(
                "{} solution rows but {} forcing rows",
                u_rows.len(),
                f_rows.len()
            )));
        }
        if u_rows.iter().chain(&f_rows).any(|r| r.len() != n_cols) {
            return Err(Error::Shape(format!("every row must have {n_cols} entries")));
        }
        Ok(Dataset {
            grid,
            xspec,
            generator,
            seed,
            n_rows: u_rows.len(),
            n_cols,
            u: u_rows.concat(),
            f: f_rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn u(&self, i: usize) -> &[f64] {
        &self.u[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn f(&self, i: usize) -> &[f64] {
        &self.f[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Rows `range` as a new dataset with the same metadata.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        let c = self.n_cols;
        Dataset {
            n_rows: range.len(),
            u: self.u[range.start * c..range.end * c].to_vec(),
            f: self.f[range.start * c..range.end * c].to_vec(),
            ..self.clone()
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let u_text = write_matrix_csv(self.n_rows, self.n_cols, &self.u);
        let f_text = write_matrix_csv(self.n_rows, self.n_cols, &self.f);
        let meta = Meta {
            format_version: FORMAT_VERSION,
            generator: self.generator.clone(),
            seed: self.seed,
            n_samples: self.n_rows,
            grid: self.grid,
            xspec: self.xspec,
            u_sha256: sha256_hex(u_text.as_bytes()),
            f_sha256: sha256_hex(f_text.as_bytes()),
        };
        let mut meta_text = serde_json::to_string_pretty(&meta)?;
        meta_text.push('\n');
        for (name, text) in [("u.csv", &u_text), ("f.csv", &f_text), ("meta.json", &meta_text)] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let meta: Meta =
            serde_json::from_str(&read("meta.json")?).map_err(|e| Error::Format(format!("meta.json: {e}")))?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset format version {}",
                meta.format_version
            )));
        }
        meta.grid.validate()?;
        let n_cols = meta.grid.n_free();
        let mut parts = Vec::with_capacity(2);
        for (name, digest) in [("u.csv", &meta.u_sha256), ("f.csv", &meta.f_sha256)] {
            let text = read(name)?;
            let (rows, data) = parse_matrix_csv(&text, n_cols)?;
            if rows != meta.n_samples {
                return Err(Error::Shape(format!(
                    "{name} has {rows} rows, metadata declares {}",
                    meta.n_samples
                )));
            }
            if &sha256_hex(text.as_bytes()) != digest {
                return Err(Error::Checksum { path: dir.join(name) });
            }
            parts.push(data);
        }
        let f = parts.pop().unwrap_or_default();
        let u = parts.pop().unwrap_or_default();
        Ok(Dataset {
            grid: meta.grid,
            xspec: meta.xspec,
            generator: meta.generator,
            seed: meta.seed,
            n_rows: meta.n_samples,
            n_cols,
            u,
            f,
        })
    }
}
