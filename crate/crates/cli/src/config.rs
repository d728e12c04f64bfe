//! Flat `key = value` configuration with precedence flags > file > defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nonlocal_ist::diagnostics::Tolerances;
use nonlocal_ist::numerics::UniformGrid;
use nonlocal_ist::scattering::Sigma;
use nonlocal_ist::{IstError, Result};

/// Keys accepted in config files and their built-in defaults. An empty default means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("input", ""),
    ("out", ""),
    ("kmin", "-24"),
    ("kmax", "24"),
    ("nk", "1024"),
    ("xmin", "-16"),
    ("xmax", "16"),
    ("nx", "512"),
    ("t", "0"),
    ("dt", "0.001"),
    ("sigma", "1"),
    ("strict", "false"),
    ("workers", "0"),
    ("dealias", "false"),
    ("kind", "gaussian"),
    ("amplitude", ""),
    ("center", ""),
    ("left", "0"),
    ("right", "1"),
    ("checks", "all"),
    ("max_iter", "200"),
];

fn tolerance_key(name: &str) -> String {
    format!("tol_{name}")
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key) || Tolerances::NAMES.iter().any(|n| tolerance_key(n) == key)
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Resolved settings: every key maps to its final textual value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    explicit: Vec<String>,
}

impl Settings {
    pub fn defaults() -> Self {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let tol = Tolerances::default();
        for name in Tolerances::NAMES {
            values.insert(tolerance_key(name), format!("{:e}", tol.get(name).unwrap()));
        }
        Self {
            values,
            explicit: Vec::new(),
        }
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse_file_text(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                IstError::Configuration(format!("config line {}: expected key = value, got {raw:?}", no + 1))
            })?;
            let key = normalize(k);
            if !known(&key) {
                return Err(IstError::Configuration(format!("config line {}: unknown key {key}", no + 1)));
            }
            out.push((key, v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| {
            IstError::Configuration(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (k, v) in Self::parse_file_text(&text)? {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = normalize(key);
        if !known(&key) {
            return Err(IstError::Configuration(format!("unknown setting {key}")));
        }
        if !self.explicit.contains(&key) {
            self.explicit.push(key.clone());
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    /// True when the key came from a file or a flag rather than the defaults.
    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| IstError::Configuration(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| IstError::Configuration(format!("setting {key} = {v:?} is not a finite number")))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse::<usize>()
            .map_err(|_| IstError::Configuration(format!("setting {key} = {v:?} is not a non-negative integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            v => Err(IstError::Configuration(format!("setting {key} = {v:?} is not a boolean"))),
        }
    }

    pub fn sigma(&self) -> Result<Sigma> {
        match self.require("sigma")? {
            "1" | "+1" | "plus" => Ok(Sigma::Plus),
            "-1" | "minus" => Ok(Sigma::Minus),
            v => Err(IstError::Configuration(format!("sigma must be 1 or -1, got {v:?}"))),
        }
    }

    pub fn kgrid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.f64("kmin")?, self.f64("kmax")?, self.usize("nk")?)
            .map_err(|e| IstError::Configuration(format!("k-grid: {e}")))
    }

    pub fn xgrid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.f64("xmin")?, self.f64("xmax")?, self.usize("nx")?)
            .map_err(|e| IstError::Configuration(format!("x-grid: {e}")))
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        for name in Tolerances::NAMES {
            tol.set(name, self.f64(&tolerance_key(name))?)?;
        }
        Ok(tol)
    }

    /// Everything, for the provenance block.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}
