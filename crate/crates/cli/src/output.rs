use std::fs;
use std::path::{Path, PathBuf};

use laxlab_core::numeric::fmt_f64;
use serde::Serialize;

use crate::Failure;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, Failure>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let io = |e: csv::Error| Failure::io(&path, e);
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }
}

/// Real and imaginary parts at the fixed CSV precision.
pub fn complex_cells(z: num_complex::Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}
