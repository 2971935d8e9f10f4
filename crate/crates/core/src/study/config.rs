//! Plain-text study configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Lists are
//! comma-separated. Recognised keys:
//!
//! ```text
//! methods   = wg, sip, nip, hho      # required
//! degrees   = 2, 3                   # required, each >= 2
//! mesh      = cartesian              # cartesian | perturbed-quad | hexagonal
//! levels    = 4, 8, 16, 32           # required, strictly increasing
//! case      = sine-squared           # sine-squared | polynomial-bubble
//! seed      = 0                      # perturbed-quad vertex jitter
//! sigma     = 20                     # DG penalty; default depends on k
//! tolerance = 1e-10                  # relative solver residual
//! output    = results                # report directory
//! condense  = false                  # static condensation for wg/hho
//! dump_matrices = false              # Matrix Market file per run
//! rate.energy = 0.75                 # minimum last-pair rates
//! rate.l2     = 1.8
//! rate.h1     = 1.3
//! gate.max_ratio  = 50               # quasi-optimality/efficiency bound
//! gate.max_growth = 0.2              # allowed relative increase per level
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ManufacturedCase;
use crate::error::{Error, Result};
use crate::localops::Method;
use crate::mesh::MeshKind;

/// Thresholds checked by a study run. Unset rates fall back to
/// degree-dependent defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    pub energy_rate: Option<f64>,
    pub l2_rate: Option<f64>,
    pub h1_rate: Option<f64>,
    pub max_ratio: f64,
    pub max_growth: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            energy_rate: None,
            l2_rate: None,
            h1_rate: None,
            max_ratio: 50.0,
            max_growth: 0.2,
        }
    }
}

impl Gates {
    /// Expected energy rate `k − 1` less a margin of 0.25 (`k = 2`) or
    /// 0.3 (`k ≥ 3`).
    pub fn energy_rate(&self, k: usize) -> f64 {
        self.energy_rate.unwrap_or(if k <= 2 {
            k as f64 - 1.25
        } else {
            k as f64 - 1.3
        })
    }

    /// Energy rate plus `min{1, k − 1}`, less 0.2.
    pub fn l2_rate(&self, k: usize) -> f64 {
        self.l2_rate
            .unwrap_or((k - 1) as f64 + 1.0f64.min((k - 1) as f64) - 0.2)
    }

    /// Energy rate plus `min{1, k − 1}/2`, less 0.2.
    pub fn h1_rate(&self, k: usize) -> f64 {
        self.h1_rate
            .unwrap_or((k - 1) as f64 + 0.5 * 1.0f64.min((k - 1) as f64) - 0.2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub methods: Vec<Method>,
    pub degrees: Vec<usize>,
    pub mesh: MeshKind,
    pub levels: Vec<usize>,
    pub case: ManufacturedCase,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub tolerance: f64,
    pub output: PathBuf,
    pub condense: bool,
    pub dump_matrices: bool,
    pub gates: Gates,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            degrees: vec![2],
            mesh: MeshKind::Cartesian,
            levels: vec![4, 8, 16],
            case: ManufacturedCase::SineSquared,
            seed: 0,
            sigma: None,
            tolerance: 1e-10,
            output: PathBuf::from("results"),
            condense: false,
            dump_matrices: false,
            gates: Gates::default(),
        }
    }
}

fn parse_list<T>(
    value: &str,
    mut item: impl FnMut(&str) -> std::result::Result<T, String>,
) -> std::result::Result<Vec<T>, String> {
    let out = value
        .split(',')
        .map(|s| item(s.trim()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse()
        .map_err(|_| format!("`{s}` is not a valid number"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

impl StudyConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let mut seen = HashSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let loc = format!("line {}", ln + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                location: loc.clone(),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(format!("missing value for `{key}`")));
            }
            let res: std::result::Result<(), String> = (|| {
                match key {
                    "methods" => {
                        cfg.methods =
                            parse_list(value, |s| s.parse::<Method>().map_err(|e| e.to_string()))?
                    }
                    "degrees" => cfg.degrees = parse_list(value, parse_num)?,
                    "mesh" => cfg.mesh = value.parse().map_err(|e: Error| e.to_string())?,
                    "levels" => cfg.levels = parse_list(value, parse_num)?,
                    "case" => cfg.case = value.parse().map_err(|e: Error| e.to_string())?,
                    "seed" => cfg.seed = parse_num(value)?,
                    "sigma" => cfg.sigma = Some(parse_num(value)?),
                    "tolerance" => cfg.tolerance = parse_num(value)?,
                    "output" => cfg.output = PathBuf::from(value),
                    "condense" => cfg.condense = parse_bool(value)?,
                    "dump_matrices" => cfg.dump_matrices = parse_bool(value)?,
                    "rate.energy" => cfg.gates.energy_rate = Some(parse_num(value)?),
                    "rate.l2" => cfg.gates.l2_rate = Some(parse_num(value)?),
                    "rate.h1" => cfg.gates.h1_rate = Some(parse_num(value)?),
                    "gate.max_ratio" => cfg.gates.max_ratio = parse_num(value)?,
                    "gate.max_growth" => cfg.gates.max_growth = parse_num(value)?,
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            res.map_err(err)?;
        }
        for key in ["methods", "degrees", "levels"] {
            if !seen.contains(key) {
                return Err(Error::Parse {
                    location: "end of file".into(),
                    message: format!("missing required key `{key}`"),
                });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.degrees.is_empty() || self.levels.is_empty() {
            return Err(Error::InvalidParameter(
                "methods, degrees and levels must be non-empty".into(),
            ));
        }
        if let Some(&k) = self.degrees.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidDegree {
                degree: k,
                reason: "all methods require k >= 2",
            });
        }
        if self.levels[0] == 0 || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "levels must be positive and strictly increasing".into(),
            ));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "penalty sigma must be positive, got {s}"
                )));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}
