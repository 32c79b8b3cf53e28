//! Run configuration: a flat JSON object plus `key=value` overrides.
//!
//! Override values are read as JSON when they parse as JSON (`p=1`,
//! `snapshot=true`, `levels=[4,8]`), as a list when they contain commas
//! (`levels=4,8,16`), and as a plain string otherwise (`case_id=aniso`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cases::PdeCase;
use crate::dofmap::SUPPORTED_ORDERS;
use crate::{DpgError, Result};

/// Finest structured mesh the driver accepts.
pub const MAX_LEVEL: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    ConvergeSpace,
    ConvergeTime,
    ConvergeProjection,
    HeatIdentity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::ConvergeSpace => "converge-space",
            Command::ConvergeTime => "converge-time",
            Command::ConvergeProjection => "converge-projection",
            Command::HeatIdentity => "heat-identity",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = DpgError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| DpgError::Config(format!("unknown command `{s}`")))
    }
}

/// How the time step is chosen for each mesh level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// `k` for every level.
    Fixed,
    /// `k = k_c * h_max`.
    CH,
    /// `k = k_c * h_max^2`.
    CH2,
    /// `k_list[i]` for level `i`, or every entry on one level in a temporal study.
    List,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub case_id: String,
    #[serde(default)]
    pub p: usize,
    pub levels: Vec<usize>,
    pub k_policy: KPolicy,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub k_c: Option<f64>,
    #[serde(default)]
    pub k_list: Option<Vec<f64>>,
    /// Time step of the self-reference solution in temporal studies; without
    /// it errors are measured against the exact solution.
    #[serde(default)]
    pub k_ref: Option<f64>,
    #[serde(rename = "T_end")]
    pub t_end: f64,
    /// Fixed number of steps per level; overrides `T_end` (which becomes `steps * k`).
    #[serde(default)]
    pub steps: Option<usize>,
    pub output_path: PathBuf,
    #[serde(default)]
    pub snapshot: bool,
    #[serde(default)]
    pub cg_tol: Option<f64>,
}

/// Splits `key=value` and interprets the value.
pub fn parse_override(arg: &str) -> Result<(String, Value)> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| DpgError::Config(format!("override `{arg}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(DpgError::Config(format!("override `{arg}` has an empty key")));
    }
    Ok((key.to_string(), parse_value(raw.trim())))
}

fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|s| parse_value(s.trim())).collect());
    }
    Value::String(raw.to_string())
}

impl RunConfig {
    /// Parses a JSON object, applies overrides in order and validates.
    pub fn from_json_str(text: &str, command: Option<Command>, overrides: &[String]) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| DpgError::Config(format!("config is not valid JSON: {e}")))?;
        let Value::Object(mut map) = value else {
            return Err(DpgError::Config("config must be a JSON object".into()));
        };
        for arg in overrides {
            let (key, v) = parse_override(arg)?;
            map.insert(key, v);
        }
        if let Some(c) = command {
            map.insert("command".into(), Value::String(c.name().into()));
        }
        Self::from_map(map)
    }

    pub fn from_path(path: &Path, command: Option<Command>, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DpgError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, command, overrides)
    }

    fn from_map(map: Map<String, Value>) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(Value::Object(map)).map_err(|e| DpgError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn case(&self) -> Result<PdeCase> {
        PdeCase::from_id(&self.case_id)
    }

    /// Time step for mesh level `index` with maximal edge length `h_max`.
    pub fn time_step(&self, index: usize, h_max: f64) -> Result<f64> {
        let missing = |what: &str| DpgError::Config(format!("k_policy {:?} requires `{what}`", self.k_policy));
        match self.k_policy {
            KPolicy::Fixed => self.k.ok_or_else(|| missing("k")),
            KPolicy::CH => Ok(self.k_c.ok_or_else(|| missing("k_c"))? * h_max),
            KPolicy::CH2 => Ok(self.k_c.ok_or_else(|| missing("k_c"))? * h_max * h_max),
            KPolicy::List => {
                let list = self.k_list.as_ref().ok_or_else(|| missing("k_list"))?;
                list.get(index).copied().ok_or_else(|| {
                    DpgError::Config(format!("k_list has no entry for level index {index}"))
                })
            }
        }
    }

    /// Number of steps and end time for time step `k`.
    pub fn schedule(&self, k: f64) -> Result<(usize, f64)> {
        match self.steps {
            Some(n) => Ok((n, n as f64 * k)),
            None => {
                let n = crate::timestep::step_count(k, self.t_end)
                    .map_err(|_| DpgError::Config(format!("T_end = {} is not a multiple of k = {k}", self.t_end)))?;
                Ok((n, self.t_end))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DpgError::Config(msg));
        self.case()?;
        if !SUPPORTED_ORDERS.contains(&self.p) {
            return bad(format!("p must be 0 or 1, got {}", self.p));
        }
        if self.levels.is_empty() {
            return bad("levels must not be empty".into());
        }
        if self.levels.iter().any(|&n| n == 0 || n > MAX_LEVEL) {
            return bad(format!("levels must lie in 1..={MAX_LEVEL}"));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad("levels must be strictly increasing".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("T_end must be positive, got {}", self.t_end));
        }
        if self.steps == Some(0) {
            return bad("steps must be at least 1".into());
        }
        if let Some(tol) = self.cg_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return bad(format!("cg_tol must lie in (0, 1), got {tol}"));
            }
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(DpgError::Config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("k", self.k)?;
        positive("k_c", self.k_c)?;
        positive("k_ref", self.k_ref)?;
        if let Some(list) = &self.k_list {
            if list.is_empty() {
                return bad("k_list must not be empty".into());
            }
            for &k in list {
                positive("k_list entry", Some(k))?;
            }
        }
        let single_level = self.levels.len() == 1;
        match self.command {
            Command::ConvergeTime => {
                if !single_level || self.k_policy != KPolicy::List {
                    return bad("converge-time needs exactly one level and k_policy \"list\"".into());
                }
                let list = self.k_list.as_ref().ok_or_else(|| DpgError::Config("converge-time requires k_list".into()))?;
                if list.windows(2).any(|w| w[0] <= w[1]) {
                    return bad("k_list must be strictly decreasing".into());
                }
                if self.steps.is_some() {
                    return bad("converge-time integrates to T_end; `steps` is not allowed".into());
                }
                for &k in list {
                    self.schedule(k)?;
                }
                if let Some(kr) = self.k_ref {
                    if list.iter().any(|&k| kr >= k) {
                        return bad("k_ref must be smaller than every entry of k_list".into());
                    }
                    self.schedule(kr)?;
                }
            }
            Command::HeatIdentity => {
                if !single_level || self.k_policy != KPolicy::Fixed {
                    return bad("heat-identity needs exactly one level and k_policy \"fixed\"".into());
                }
            }
            _ => {
                if self.k_policy == KPolicy::List && self.k_list.as_ref().is_some_and(|l| l.len() != self.levels.len()) {
                    return bad("k_list needs one entry per level".into());
                }
            }
        }
        if self.command != Command::ConvergeTime {
            for (i, &n) in self.levels.iter().enumerate() {
                let k = self.time_step(i, std::f64::consts::SQRT_2 / n as f64)?;
                let (_, t_end) = self.schedule(k)?;
                if k > t_end * (1.0 + 1e-12) {
                    return bad(format!("k = {k} exceeds the end time {t_end}"));
                }
            }
        }
        Ok(())
    }
}
