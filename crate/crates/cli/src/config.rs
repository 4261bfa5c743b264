use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use laxlab_core::toeplitz::{DEFAULT_SCHEDULE, DEFAULT_THRESHOLD};
use laxlab_core::{LaxConfig, Window};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub resolution: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub threshold: f64,
    /// Orders used by `refine`.
    pub schedule: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSettings {
    pub mn_bound: i64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub directory: PathBuf,
    pub formats: BTreeSet<Format>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lax: LaxConfig,
    pub window: Window,
    pub scan: ScanSettings,
    pub lattice: LatticeSettings,
    pub output: OutputSettings,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lax: LaxConfig::reference(),
            window: Window::centered(4.0, 4.0),
            scan: ScanSettings {
                resolution: 64,
                n: 32,
                threshold: DEFAULT_THRESHOLD,
                schedule: DEFAULT_SCHEDULE.to_vec(),
            },
            lattice: LatticeSettings { mn_bound: 12, tol: 1e-6 },
            output: OutputSettings {
                directory: PathBuf::from("laxlab-out"),
                formats: [Format::Csv, Format::Json].into_iter().collect(),
            },
            seed: 7,
        }
    }
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    fn validate(&self) -> Result<(), String> {
        let w = &self.window;
        if !w.is_valid() || ![w.re_min, w.re_max, w.im_min, w.im_max].iter().all(|v| v.is_finite()) {
            return Err("window: must be a non-empty finite rectangle".into());
        }
        if self.scan.resolution < 16 {
            return Err(format!("scan.resolution: must be at least 16, got {}", self.scan.resolution));
        }
        if self.scan.n == 0 {
            return Err("scan.N: must be positive".into());
        }
        if !(self.scan.threshold > 0.0) {
            return Err("scan.threshold: must be positive".into());
        }
        if self.scan.schedule.is_empty() || self.scan.schedule.contains(&0) {
            return Err("scan.schedule: needs at least one positive order".into());
        }
        if self.lattice.mn_bound < 1 {
            return Err(format!("lattice.mn_bound: must be at least 1, got {}", self.lattice.mn_bound));
        }
        if !(self.lattice.tol > 0.0) {
            return Err("lattice.tol: must be positive".into());
        }
        if self.output.formats.is_empty() {
            return Err("output.formats: choose at least one of csv, json".into());
        }
        Ok(())
    }
}

/// How a flag's text becomes a JSON value.
#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Complex,
    Json,
    Text,
    List,
}

pub struct Override<'a> {
    pub path: &'static str,
    pub raw: Option<&'a str>,
    pub kind: Kind,
}

/// Parses `[re, im]`, `re,im` or a bare real number.
pub fn parse_complex(raw: &str) -> Option<Value> {
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::Number(n)) => return Some(Value::Array(vec![Value::Number(n), 0.into()])),
        Ok(v @ Value::Array(_)) => return Some(v),
        _ => {}
    }
    let parts: Vec<f64> = raw.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts.as_slice() {
        [re] => Some(serde_json::json!([re, 0.0])),
        [re, im] => Some(serde_json::json!([re, im])),
        _ => None,
    }
}

fn flag_value(o: &Override, raw: &str) -> Result<Value, Failure> {
    match o.kind {
        Kind::Complex => parse_complex(raw)
            .ok_or_else(|| Failure::config(format!("--{}: expected a complex number, got {raw:?}", o.path))),
        Kind::Json => Ok(serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()))),
        Kind::Text => Ok(Value::String(raw.into())),
        Kind::List => Ok(Value::Array(
            raw.split(',').filter(|s| !s.is_empty()).map(|s| Value::String(s.trim().into())).collect(),
        )),
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    for key in path.split('.') {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        cur = cur.as_object_mut().expect("object").entry(key).or_insert(Value::Null);
    }
    *cur = value;
}

/// Defaults, then the config file, then flag overrides; the result is
/// validated and any type error names the offending field.
pub fn load(file: Option<&Path>, overrides: &[Override]) -> Result<RunConfig, Failure> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: malformed JSON: {e}", path.display())))?;
        if !patch.is_object() {
            return Err(Failure::config(format!("{}: top level must be an object", path.display())));
        }
        merge(&mut value, patch);
    }
    for o in overrides {
        if let Some(raw) = o.raw {
            set_path(&mut value, o.path, flag_value(o, raw)?);
        }
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Failure::config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}
