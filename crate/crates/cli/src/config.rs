//! Plain-text `key = value` configuration.
//!
//! ```text
//! # barrier
//! v0_ev = 10
//! a_angstrom = 5
//! # packet
//! ebar_ev = 5
//! dk_inv_angstrom = 0.01
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys, repeated keys and
//! values that fail to parse are errors that name the key and the line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use tunneltime::quadrature::{TimeGridOverrides, DEFAULT_HALF_WINDOW, DEFAULT_MAX_LEVELS, DEFAULT_TOL};
use tunneltime::{BarrierSpec, OverBarrierPolicy, PacketSpec, Scenario};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn key(key: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Keys describing one physical scenario.
pub const SCENARIO_KEYS: [&str; 7] = [
    "v0_ev",
    "a_angstrom",
    "ebar_ev",
    "dk_inv_angstrom",
    "dwell_xi_angstrom",
    "dwell_xf_angstrom",
    "over_barrier",
];

/// Keys controlling resolution and output, valid for every command.
pub const RUN_KEYS: [&str; 7] = [
    "t_window_s",
    "t_nodes",
    "k_panels",
    "tol",
    "max_levels",
    "n_x",
    "output_path",
];

/// Every key as written, with the line it came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: Vec<(usize, String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: "missing key before `=`".into(),
                });
            }
            if !SCENARIO_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
                return Err(ConfigError::at(line, key, "unknown key"));
            }
            if let Some((first, ..)) = entries.iter().find(|(_, k, _)| k == key) {
                return Err(ConfigError::at(line, key, format!("already set on line {first}")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, key, "missing value"));
            }
            entries.push((line, key.to_string(), value.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    fn find(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(usize, T)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.find(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(|x| Some((line, x)))
                .map_err(|e| ConfigError::at(line, key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get::<f64>(key)? {
            None => Ok(None),
            Some((line, v)) if !(v.is_finite() && v > 0.0) => {
                Err(ConfigError::at(line, key, format!("must be a positive finite number, got {v}")))
            }
            Some((_, v)) => Ok(Some(v)),
        }
    }

    fn finite(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get::<f64>(key)? {
            Some((line, v)) if !v.is_finite() => Err(ConfigError::at(line, key, "must be finite")),
            other => Ok(other.map(|(_, v)| v)),
        }
    }

    fn count(&self, key: &str, min: usize) -> Result<Option<usize>, ConfigError> {
        match self.get::<usize>(key)? {
            Some((line, v)) if v < min => Err(ConfigError::at(line, key, format!("must be >= {min}, got {v}"))),
            other => Ok(other.map(|(_, v)| v)),
        }
    }

    fn required(&self, key: &str) -> Result<f64, ConfigError> {
        self.positive(key)?
            .ok_or_else(|| ConfigError::key(key, "required key is missing"))
    }
}

/// Resolution, tolerance and output settings shared by every command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Full width of the symmetric time window, s.
    pub t_window_s: f64,
    pub t_nodes: Option<usize>,
    pub k_panels: Option<usize>,
    pub tol: f64,
    pub max_levels: usize,
    pub n_x: usize,
    pub output_path: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_window_s: 2.0 * DEFAULT_HALF_WINDOW,
            t_nodes: None,
            k_panels: None,
            tol: DEFAULT_TOL,
            max_levels: DEFAULT_MAX_LEVELS,
            n_x: 11,
            output_path: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let d = Self::default();
        Ok(Self {
            t_window_s: raw.positive("t_window_s")?.unwrap_or(d.t_window_s),
            t_nodes: raw.count("t_nodes", 3)?,
            k_panels: raw.count("k_panels", 1)?,
            tol: raw.positive("tol")?.unwrap_or(d.tol),
            max_levels: raw.count("max_levels", 1)?.unwrap_or(d.max_levels),
            n_x: raw.count("n_x", 2)?.unwrap_or(d.n_x),
            output_path: raw
                .find("output_path")
                .map(|(_, v)| PathBuf::from(v))
                .unwrap_or(d.output_path),
        })
    }

    /// Applies command-line overrides.
    pub fn with_overrides(
        mut self,
        tol: Option<f64>,
        max_levels: Option<usize>,
        out: Option<PathBuf>,
    ) -> Result<Self, ConfigError> {
        if let Some(tol) = tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(ConfigError::key("--tol", format!("must be a positive finite number, got {tol}")));
            }
            self.tol = tol;
        }
        if let Some(levels) = max_levels {
            if levels == 0 {
                return Err(ConfigError::key("--max-levels", "must be >= 1"));
            }
            self.max_levels = levels;
        }
        if let Some(out) = out {
            self.output_path = out;
        }
        Ok(self)
    }

    pub fn time_overrides(&self) -> TimeGridOverrides {
        let half = 0.5 * self.t_window_s;
        TimeGridOverrides {
            window: Some((-half, half)),
            n: self.t_nodes,
        }
    }

    /// Rejects scenario keys, for commands that sweep a built-in lattice.
    pub fn sweep_only(raw: &RawConfig) -> Result<Self, ConfigError> {
        if let Some((line, key, _)) = raw.entries.iter().find(|(_, k, _)| SCENARIO_KEYS.contains(&k.as_str())) {
            return Err(ConfigError::at(*line, key, "not allowed here: this command sweeps a built-in lattice"));
        }
        Self::from_raw(raw)
    }
}

/// One physical scenario plus run settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub v0_ev: f64,
    pub a_angstrom: f64,
    pub ebar_ev: f64,
    pub dk_inv_angstrom: f64,
    pub dwell_xi_angstrom: f64,
    pub dwell_xf_angstrom: f64,
    pub over_barrier: OverBarrierPolicy,
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let v0_ev = raw.required("v0_ev")?;
        let a_angstrom = raw.required("a_angstrom")?;
        let ebar_ev = raw.required("ebar_ev")?;
        let dk_inv_angstrom = raw.required("dk_inv_angstrom")?;
        if ebar_ev >= v0_ev {
            let line = raw.find("ebar_ev").map(|(l, _)| l);
            return Err(ConfigError {
                line,
                key: Some("ebar_ev".into()),
                message: format!("must be below v0_ev = {v0_ev} (sub-barrier packets only), got {ebar_ev}"),
            });
        }
        let dwell_xi_angstrom = raw.finite("dwell_xi_angstrom")?.unwrap_or(-a_angstrom);
        let dwell_xf_angstrom = raw.finite("dwell_xf_angstrom")?.unwrap_or(2.0 * a_angstrom);
        if dwell_xi_angstrom >= 0.0 {
            return Err(ConfigError::key("dwell_xi_angstrom", "must lie before the barrier (< 0)"));
        }
        if dwell_xf_angstrom <= a_angstrom {
            return Err(ConfigError::key("dwell_xf_angstrom", "must lie beyond the barrier (> a_angstrom)"));
        }
        let over_barrier = match raw.find("over_barrier") {
            None | Some((_, "exclude")) => OverBarrierPolicy::Exclude,
            Some((_, "error")) => OverBarrierPolicy::Error,
            Some((line, v)) => {
                return Err(ConfigError::at(line, "over_barrier", format!("expected `exclude` or `error`, got `{v}`")))
            }
        };
        let cfg = Self {
            v0_ev,
            a_angstrom,
            ebar_ev,
            dk_inv_angstrom,
            dwell_xi_angstrom,
            dwell_xf_angstrom,
            over_barrier,
            run: RunConfig::from_raw(raw)?,
        };
        // Surface packet and window problems now, before any run starts.
        let scenario = cfg.scenario()?;
        scenario
            .time_grid()
            .map_err(|e| ConfigError::key("t_window_s", e.to_string()))?;
        scenario
            .packet
            .support(&scenario.barrier)
            .map_err(|e| ConfigError::key("dk_inv_angstrom", e.to_string()))?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let barrier =
            BarrierSpec::new(self.v0_ev, self.a_angstrom).map_err(|e| ConfigError::key("a_angstrom", e.to_string()))?;
        let packet = PacketSpec::from_energy(self.ebar_ev, self.dk_inv_angstrom)
            .map_err(|e| ConfigError::key("ebar_ev", e.to_string()))?
            .with_policy(self.over_barrier);
        let mut s = Scenario::new(barrier, packet);
        s.time = self.run.time_overrides();
        Ok(s)
    }
}
