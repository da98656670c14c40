//! Run configuration: TOML file, command-line overrides and the cache key.
//!
//! Keys (all optional, defaults in brackets):
//!
//! ```toml
//! L = 1.0            # half-width [1]
//! K = 0.6666666667   # half-height [2/3]
//! delta = 0.2666667  # lead half-length [4/15]
//! h = 0.0            # applied field [0]
//! I = 0.0            # applied current [0]
//! gamma = 0.0        # Gamma; TDGL commands replace it by Re lambda_1 + eps [0]
//! nx = 65            # nodes in x [65]
//! ny = 45            # nodes in y [45]
//! tol = 1e-8         # eigenpair residual target [1e-8]
//! eigs = 4           # eigenvalues reported [4]
//! eps = 0.01         # Gamma = Re lambda_1 (1 + eps) for TDGL commands [0.01]
//! dt = 0.001         # time step [auto]
//! settle = 60.0      # periods discarded before measuring [60]
//! periods = 1.0      # periods recorded [1]
//! prominence = 0.05  # scenario classifier threshold, rad [0.05]
//! ic_lo = 0.0        # critical-current bracket [0, 120]
//! ic_hi = 120.0
//! seed = 0           # eigensolver start vectors [0]
//! workers = 0        # sweep worker threads, 0 = all cores [0]
//! output = "out"     # [out, or $VORTEXLAB_OUT]
//! cache = true       # [true]
//!
//! [sweep]            # required by `sweep`, optional for `spectrum`
//! param = "I"        # "I" or "h"
//! from = 0.0
//! to = 120.0
//! count = 25
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Params;
use crate::spectral::{EigenOptions, SweepParam};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUTPUT_ENV: &str = "VORTEXLAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: AxisName,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    I,
    #[serde(rename = "h")]
    H,
}

impl AxisName {
    pub fn sweep_param(self) -> SweepParam {
        match self {
            AxisName::I => SweepParam::Current,
            AxisName::H => SweepParam::Field,
        }
    }
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| self.from + (self.to - self.from) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "K")]
    pub half_height: f64,
    pub delta: f64,
    pub h: f64,
    #[serde(rename = "I")]
    pub current: f64,
    pub gamma: f64,
    pub nx: usize,
    pub ny: usize,
    pub tol: f64,
    pub eigs: usize,
    pub eps: f64,
    pub dt: Option<f64>,
    pub settle: f64,
    pub periods: f64,
    pub prominence: f64,
    pub ic_lo: f64,
    pub ic_hi: f64,
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    pub cache: bool,
    pub sweep: Option<SweepAxis>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = Params::canonical();
        RunConfig {
            half_width: p.half_width,
            half_height: p.half_height,
            delta: p.lead_half_width,
            h: 0.0,
            current: 0.0,
            gamma: 0.0,
            nx: 65,
            ny: 45,
            tol: 1e-8,
            eigs: 4,
            eps: 0.01,
            dt: None,
            settle: 60.0,
            periods: 1.0,
            prominence: 0.05,
            ic_lo: 0.0,
            ic_hi: 120.0,
            seed: 0,
            workers: 0,
            output: PathBuf::from("out"),
            cache: true,
            sweep: None,
        }
    }
}

fn positive(key: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(key, format!("must be > 0, got {v}")))
    }
}

impl RunConfig {
    pub fn params(&self) -> Params {
        Params {
            half_width: self.half_width,
            half_height: self.half_height,
            lead_half_width: self.delta,
            field: self.h,
            current: self.current,
            gamma: self.gamma,
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions { tol: self.tol, seed: self.seed, ..EigenOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::param("nx", format!("need nx, ny >= 5, got {}x{}", self.nx, self.ny)));
        }
        positive("tol", self.tol)?;
        positive("eps", self.eps)?;
        positive("periods", self.periods)?;
        positive("prominence", self.prominence)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if !(self.settle >= 0.0 && self.settle.is_finite()) {
            return Err(Error::param("settle", "must be >= 0"));
        }
        if self.eigs == 0 {
            return Err(Error::param("eigs", "must be >= 1"));
        }
        if !(self.ic_lo >= 0.0 && self.ic_lo < self.ic_hi && self.ic_hi.is_finite()) {
            return Err(Error::param("ic_lo", "need 0 <= ic_lo < ic_hi"));
        }
        if let Some(s) = &self.sweep {
            if !(s.from.is_finite() && s.to.is_finite() && s.from < s.to) {
                return Err(Error::param("sweep", "need from < to"));
            }
            if s.count < 2 {
                return Err(Error::param("sweep", "count must be >= 2"));
            }
            if s.from < 0.0 {
                return Err(Error::param("sweep", "values must be >= 0"));
            }
        }
        Ok(())
    }

    /// Checks that the output directory can be created and written.
    pub fn check_output(&self) -> Result<()> {
        let dir = &self.output;
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::param("output", format!("{}: {e}", dir.display())))?;
        let probe = dir.join(format!(".write-test-{}", std::process::id()));
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| Error::param("output", format!("{} not writable: {e}", dir.display())))
    }

    /// Everything that determines results, as sorted-key JSON.
    pub fn canonical(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let map = v.as_object_mut().expect("config is a map");
        for key in ["output", "cache", "workers"] {
            map.remove(key);
        }
        serde_json::to_string(&v).expect("config serializes")
    }

    /// SHA-256 over the canonical config (which includes the grid) and the
    /// tool version, first 16 hex digits.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(b"\0");
        h.update(VERSION.as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::param("config", e.to_string())
}

/// Reads the TOML file (if any), applies `overrides` on top and validates.
///
/// `overrides` are top-level keys in the file's own syntax, so unknown
/// names are rejected the same way in both places. The output directory
/// falls back to `$VORTEXLAB_OUT` when neither sets it.
pub fn parse_config(path: Option<&Path>, overrides: toml::Table) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::param("config", format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(parse_error)?
        }
        None => toml::Table::new(),
    };
    if !table.contains_key("output") && !overrides.contains_key("output") {
        if let Ok(dir) = std::env::var(OUTPUT_ENV) {
            table.insert("output".into(), toml::Value::String(dir));
        }
    }
    for (k, v) in overrides {
        match (table.get_mut(&k), v) {
            (Some(toml::Value::Table(old)), toml::Value::Table(new)) => old.extend(new),
            (_, v) => {
                table.insert(k, v);
            }
        }
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(parse_error)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(s: &str, overrides: toml::Table) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, s).unwrap();
        parse_config(Some(&p), overrides)
    }

    #[test]
    fn empty_file_gives_canonical_geometry() {
        let c = from_str("", toml::Table::new()).unwrap();
        assert_eq!(c.params(), Params::canonical());
    }

    #[test]
    fn lead_longer_than_side_is_rejected() {
        let e = from_str("delta = 0.9", toml::Table::new()).unwrap_err();
        assert!(e.to_string().contains("delta must be < K"), "{e}");
    }

    #[test]
    fn flags_override_file() {
        let mut o = toml::Table::new();
        o.insert("I".into(), toml::Value::Float(25.0));
        let c = from_str("I = 10.0", o).unwrap();
        assert_eq!(c.current, 25.0);
    }

    #[test]
    fn sweep_overrides_merge() {
        let mut sweep = toml::Table::new();
        sweep.insert("count".into(), toml::Value::Integer(5));
        let mut o = toml::Table::new();
        o.insert("sweep".into(), toml::Value::Table(sweep));
        let c = from_str("[sweep]\nparam = \"h\"\nfrom = 0.0\nto = 2.0\ncount = 3\n", o).unwrap();
        assert_eq!(c.sweep.unwrap().count, 5);
        assert_eq!(c.sweep.unwrap().param, AxisName::H);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(from_str("current = 3.0", toml::Table::new()).is_err());
        assert!(from_str("[sweep]\nparam = \"I\"\nfrom = 0.0\nto = 1.0\ncount = 3\nstep = 1", toml::Table::new()).is_err());
    }

    #[test]
    fn hash_ignores_key_order_and_plumbing() {
        let a = from_str("I = 3.0\nh = 1.0\noutput = \"a\"", toml::Table::new()).unwrap();
        let b = from_str("h = 1.0\nI = 3.0\noutput = \"b\"\ncache = false", toml::Table::new()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = from_str("h = 1.0\nI = 3.0\nnx = 33", toml::Table::new()).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_tolerances_name_the_key() {
        let e = from_str("tol = -1.0", toml::Table::new()).unwrap_err();
        assert!(e.to_string().contains("tol"));
        let e = from_str("[sweep]\nparam = \"I\"\nfrom = 2.0\nto = 1.0\ncount = 3", toml::Table::new()).unwrap_err();
        assert!(e.to_string().contains("sweep"));
    }
}
