//! Run configuration: a strict JSON document.
//!
//! ```json
//! {
//!   "model": "nse",
//!   "grid": { "resolution": 32, "period": 6.283185307179586, "dealias_fraction": 0.6666666666666666 },
//!   "filter": { "alpha": 0.1, "theta": 0.16666666666666666 },
//!   "physics": { "nu": 0.1 },
//!   "time": { "dt": 0.001, "t_end": 1.0 },
//!   "initial_condition": "taylor-green",
//!   "output": { "directory": "out", "snapshot_every": 0, "budget_every": 1, "norms_every": 10 }
//! }
//! ```
//!
//! `period` defaults to `2 pi`, `dealias_fraction` to `2/3`, `theta` to `1/6`. MHD runs
//! take `"physics": { "nu1": .., "nu2": .. }` and an optional `magnetic_initial_condition`
//! (zero when absent). Initial conditions are one of `"taylor-green"`, `"shear-mode"`,
//! `"orszag-tang"`, `"zero"`, `"file:<snapshot.json>"`, or an object such as
//! `{"random-solenoidal": {"seed": 7, "spectrum_slope": -1.6667, "amplitude": 1.0}}`,
//! `{"taylor-green": {"amplitude": 2.0}}`. Forcing is absent, `null`, or
//! `{"low-mode": {"amplitude": 0.5}}` / `{"file": {"path": "f.json"}}`. Sweeps add
//! `"sweep": { "alphas": [0.4, 0.2, 0.1], "lp": [2, 3] }`.
//!
//! Unknown keys anywhere are rejected, and every value is range-checked before any
//! field is built.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use critles::diagnostics::validate_alphas;
use critles::{make_grid, FilterParams};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::MANIFEST_FORMAT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Nse,
    Mhd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub resolution: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_period() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub alpha: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    FilterParams::CRITICAL_THETA
}

/// `nu` for the fluid model; `nu1` (viscosity) and `nu2` (resistivity) for MHD.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
}

impl TimeSpec {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    TaylorGreen {
        amplitude: f64,
    },
    ShearMode {
        amplitude: f64,
    },
    OrszagTang,
    Zero,
    File {
        path: PathBuf,
    },
    RandomSolenoidal {
        seed: u64,
        spectrum_slope: f64,
        amplitude: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeArgs {
    #[serde(default = "one")]
    amplitude: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomArgs {
    seed: u64,
    spectrum_slope: f64,
    #[serde(default = "one")]
    amplitude: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathArgs {
    path: PathBuf,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TaggedInitial {
    TaylorGreen(AmplitudeArgs),
    ShearMode(AmplitudeArgs),
    RandomSolenoidal(RandomArgs),
    File(PathArgs),
}

impl InitialCondition {
    fn from_name(name: &str) -> Result<Self, String> {
        if let Some(path) = name.strip_prefix("file:") {
            if path.is_empty() {
                return Err("`file:` needs a snapshot path".into());
            }
            return Ok(InitialCondition::File { path: path.into() });
        }
        match name {
            "taylor-green" => Ok(InitialCondition::TaylorGreen { amplitude: 1.0 }),
            "shear-mode" => Ok(InitialCondition::ShearMode { amplitude: 1.0 }),
            "orszag-tang" => Ok(InitialCondition::OrszagTang),
            "zero" => Ok(InitialCondition::Zero),
            other => Err(format!(
                "unknown initial condition {other:?}; expected taylor-green, shear-mode, \
                 orszag-tang, zero, file:<path> or {{\"random-solenoidal\": {{..}}}}"
            )),
        }
    }

    fn amplitude(&self) -> f64 {
        match self {
            InitialCondition::TaylorGreen { amplitude }
            | InitialCondition::ShearMode { amplitude }
            | InitialCondition::RandomSolenoidal { amplitude, .. } => *amplitude,
            _ => 1.0,
        }
    }
}

impl<'de> Deserialize<'de> for InitialCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        if let serde_json::Value::String(name) = &value {
            return InitialCondition::from_name(name).map_err(de::Error::custom);
        }
        let tagged: TaggedInitial = serde_json::from_value(value).map_err(de::Error::custom)?;
        Ok(match tagged {
            TaggedInitial::TaylorGreen(a) => InitialCondition::TaylorGreen {
                amplitude: a.amplitude,
            },
            TaggedInitial::ShearMode(a) => InitialCondition::ShearMode {
                amplitude: a.amplitude,
            },
            TaggedInitial::RandomSolenoidal(r) => InitialCondition::RandomSolenoidal {
                seed: r.seed,
                spectrum_slope: r.spectrum_slope,
                amplitude: r.amplitude,
            },
            TaggedInitial::File(p) => InitialCondition::File { path: p.path },
        })
    }
}

impl Serialize for InitialCondition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            InitialCondition::OrszagTang => s.serialize_str("orszag-tang"),
            InitialCondition::Zero => s.serialize_str("zero"),
            InitialCondition::TaylorGreen { amplitude } => {
                TaggedInitial::TaylorGreen(AmplitudeArgs {
                    amplitude: *amplitude,
                })
                .serialize(s)
            }
            InitialCondition::ShearMode { amplitude } => TaggedInitial::ShearMode(AmplitudeArgs {
                amplitude: *amplitude,
            })
            .serialize(s),
            InitialCondition::RandomSolenoidal {
                seed,
                spectrum_slope,
                amplitude,
            } => TaggedInitial::RandomSolenoidal(RandomArgs {
                seed: *seed,
                spectrum_slope: *spectrum_slope,
                amplitude: *amplitude,
            })
            .serialize(s),
            InitialCondition::File { path } => {
                TaggedInitial::File(PathArgs { path: path.clone() }).serialize(s)
            }
        }
    }
}

/// Steady body force added to the velocity equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    LowMode { amplitude: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Snapshot every this many steps; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "one_step")]
    pub budget_every: usize,
    #[serde(default = "one_step")]
    pub norms_every: usize,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

fn one_step() -> usize {
    1
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_directory(),
            snapshot_every: 0,
            budget_every: 1,
            norms_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    #[serde(default = "default_lp")]
    pub lp: Vec<f64>,
}

fn default_lp() -> Vec<f64> {
    vec![2.0, 3.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub grid: GridSpec,
    pub filter: FilterSpec,
    pub physics: PhysicsSpec,
    pub time: TimeSpec,
    pub initial_condition: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic_initial_condition: Option<InitialCondition>,
    /// Apply the filter to the initial data before the first step.
    #[serde(default)]
    pub filter_initial_data: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// A rejected value: dotted key and reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Invalid {
    Invalid {
        key: key.into(),
        message: message.into(),
    }
}

fn positive(key: &str, x: f64) -> Result<(), Invalid> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {x}")))
    }
}

fn finite(key: &str, x: f64) -> Result<(), Invalid> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite, got {x}")))
    }
}

impl RunConfig {
    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            alpha: self.filter.alpha,
            theta: self.filter.theta,
        }
    }

    /// Range and consistency checks; no fields are built.
    pub fn validate(&self) -> Result<(), Invalid> {
        let g = &self.grid;
        if !g.resolution.is_multiple_of(2) {
            return Err(invalid(
                "grid.resolution",
                format!("must be even, got {}", g.resolution),
            ));
        }
        positive("grid.period", g.period)?;
        make_grid(g.resolution, g.period, g.dealias_fraction)
            .map_err(|e| invalid("grid", e.to_string()))?;

        if !(self.filter.alpha.is_finite() && self.filter.alpha >= 0.0) {
            return Err(invalid(
                "filter.alpha",
                format!("must be finite and >= 0, got {}", self.filter.alpha),
            ));
        }
        positive("filter.theta", self.filter.theta)?;

        let p = &self.physics;
        match self.model {
            Model::Nse => {
                if p.nu1.is_some() || p.nu2.is_some() {
                    return Err(invalid("physics", "nu1/nu2 apply to model \"mhd\"; use nu"));
                }
                positive(
                    "physics.nu",
                    p.nu.ok_or_else(|| invalid("physics.nu", "missing"))?,
                )?;
                if self.magnetic_initial_condition.is_some() {
                    return Err(invalid(
                        "magnetic_initial_condition",
                        "only valid for model \"mhd\"",
                    ));
                }
            }
            Model::Mhd => {
                if p.nu.is_some() {
                    return Err(invalid(
                        "physics",
                        "model \"mhd\" takes nu1 and nu2, not nu",
                    ));
                }
                positive(
                    "physics.nu1",
                    p.nu1.ok_or_else(|| invalid("physics.nu1", "missing"))?,
                )?;
                positive(
                    "physics.nu2",
                    p.nu2.ok_or_else(|| invalid("physics.nu2", "missing"))?,
                )?;
            }
        }

        positive("time.dt", self.time.dt)?;
        positive("time.t_end", self.time.t_end)?;
        let ratio = self.time.t_end / self.time.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(invalid(
                "time.t_end",
                format!(
                    "must be a positive whole number of steps of dt = {}, got {} steps",
                    self.time.dt, ratio
                ),
            ));
        }

        check_initial("initial_condition", &self.initial_condition)?;
        if let Some(ic) = &self.magnetic_initial_condition {
            check_initial("magnetic_initial_condition", ic)?;
        }
        if let Some(ForcingSpec::LowMode { amplitude }) = &self.forcing {
            finite("forcing.low-mode.amplitude", *amplitude)?;
        }

        if self.output.budget_every == 0 {
            return Err(invalid("output.budget_every", "must be >= 1"));
        }
        if self.output.norms_every == 0 {
            return Err(invalid("output.norms_every", "must be >= 1"));
        }

        if let Some(s) = &self.sweep {
            validate_alphas(&s.alphas).map_err(|e| invalid("sweep.alphas", e.to_string()))?;
            if s.lp.is_empty() {
                return Err(invalid("sweep.lp", "must list at least one exponent"));
            }
            if let Some(p) = s.lp.iter().find(|p| !(p.is_finite() && **p >= 1.0)) {
                return Err(invalid(
                    "sweep.lp",
                    format!("exponents must be >= 1, got {p}"),
                ));
            }
        }
        Ok(())
    }

    /// Makes relative file paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for ic in [
            Some(&mut self.initial_condition),
            self.magnetic_initial_condition.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            if let InitialCondition::File { path } = ic {
                fix(path);
            }
        }
        if let Some(ForcingSpec::File { path }) = &mut self.forcing {
            fix(path);
        }
        fix(&mut self.output.directory);
    }

    /// Replaces the seeds of random initial data: the velocity gets `seed`, the
    /// magnetic field `seed + 1`.
    pub fn override_seed(&mut self, seed: u64) {
        if let InitialCondition::RandomSolenoidal { seed: s, .. } = &mut self.initial_condition {
            *s = seed;
        }
        if let Some(InitialCondition::RandomSolenoidal { seed: s, .. }) =
            &mut self.magnetic_initial_condition
        {
            *s = seed.wrapping_add(1);
        }
    }
}

fn check_initial(key: &str, ic: &InitialCondition) -> Result<(), Invalid> {
    finite(&format!("{key}.amplitude"), ic.amplitude())?;
    if let InitialCondition::RandomSolenoidal { spectrum_slope, .. } = ic {
        finite(&format!("{key}.spectrum_slope"), *spectrum_slope)?;
    }
    Ok(())
}

/// Parses `text` as a config, or as a run manifest whose `config` entry is used.
pub fn parse(text: &str, origin: &Path) -> CliResult<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::config(origin, None, format!("malformed JSON: {e}")))?;
    let is_manifest = value.get("format").and_then(|f| f.as_str()) == Some(MANIFEST_FORMAT);
    let cfg: RunConfig = if is_manifest {
        let inner = value
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::config(origin, Some("config"), "manifest has no config"))?;
        serde_path_to_error::deserialize(inner).map_err(|e| path_error(origin, e, "config."))?
    } else {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| path_error(origin, e, ""))?
    };
    cfg.validate()
        .map_err(|e| CliError::config(origin, Some(&e.key), e.message))?;
    Ok(cfg)
}

fn path_error<E: fmt::Display>(
    origin: &Path,
    e: serde_path_to_error::Error<E>,
    prefix: &str,
) -> CliError {
    let key = e.path().to_string();
    let key = if key == "." {
        None
    } else {
        Some(format!("{prefix}{key}"))
    };
    CliError::config(origin, key.as_deref(), e.inner().to_string())
}

/// Reads and validates a config (or manifest) file; relative paths inside it are
/// taken relative to the file's directory.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(path, None, format!("cannot read: {e}")))?;
    let mut cfg = parse(&text, path)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let base = fs::canonicalize(&base).unwrap_or(base);
    cfg.resolve_paths(&base);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "model": "nse",
        "grid": { "resolution": 16 },
        "filter": { "alpha": 0.1 },
        "physics": { "nu": 0.1 },
        "time": { "dt": 0.01, "t_end": 0.1 },
        "initial_condition": "taylor-green"
    }"#;

    fn parse_str(text: &str) -> CliResult<RunConfig> {
        parse(text, Path::new("test.json"))
    }

    fn with(key: &str, value: serde_json::Value) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        let mut target = &mut v;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            target = target.get_mut(*part).unwrap();
        }
        target[parts[parts.len() - 1]] = value;
        v.to_string()
    }

    fn rejected_key(text: &str) -> Option<String> {
        match parse_str(text) {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_filled_in() {
        let cfg = parse_str(BASE).unwrap();
        assert_eq!(cfg.grid.period, 2.0 * std::f64::consts::PI);
        assert_eq!(cfg.grid.dealias_fraction, 2.0 / 3.0);
        assert_eq!(cfg.filter.theta, 1.0 / 6.0);
        assert_eq!(cfg.output, OutputSpec::default());
        assert!(!cfg.filter_initial_data);
        assert_eq!(cfg.time.steps(), 10);
    }

    #[test]
    fn unknown_keys_name_their_location() {
        assert_eq!(
            rejected_key(&with("grid.resolutoin", 16.into())).as_deref(),
            Some("grid.resolutoin")
        );
        let top = with("extra", true.into());
        let err = parse_str(&top).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert_eq!(
            rejected_key(&with("grid.resolution", 17.into())).as_deref(),
            Some("grid.resolution")
        );
        assert_eq!(
            rejected_key(&with("filter.alpha", (-0.1).into())).as_deref(),
            Some("filter.alpha")
        );
        assert_eq!(
            rejected_key(&with("physics.nu", 0.0.into())).as_deref(),
            Some("physics.nu")
        );
        assert_eq!(
            rejected_key(&with("time.t_end", 0.105.into())).as_deref(),
            Some("time.t_end")
        );
        assert_eq!(
            rejected_key(&with("model", "mhd".into())).as_deref(),
            Some("physics")
        );
    }

    #[test]
    fn wrong_types_report_the_key() {
        assert_eq!(
            rejected_key(&with("grid.resolution", "big".into())).as_deref(),
            Some("grid.resolution")
        );
    }

    #[test]
    fn initial_condition_forms() {
        let file = parse_str(&with("initial_condition", "file:w.json".into())).unwrap();
        assert_eq!(
            file.initial_condition,
            InitialCondition::File {
                path: "w.json".into()
            }
        );

        let random = serde_json::json!({"random-solenoidal": {"seed": 3, "spectrum_slope": -2.0}});
        let cfg = parse_str(&with("initial_condition", random)).unwrap();
        assert_eq!(
            cfg.initial_condition,
            InitialCondition::RandomSolenoidal {
                seed: 3,
                spectrum_slope: -2.0,
                amplitude: 1.0
            }
        );

        let bad = serde_json::json!({"random-solenoidal": {"seed": 3, "slope": -2.0}});
        assert_eq!(
            rejected_key(&with("initial_condition", bad)).as_deref(),
            Some("initial_condition")
        );
        assert!(parse_str(&with("initial_condition", "vortex".into())).is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let mut cfg = parse_str(BASE).unwrap();
        cfg.model = Model::Mhd;
        cfg.physics = PhysicsSpec {
            nu: None,
            nu1: Some(0.1),
            nu2: Some(0.05),
        };
        cfg.initial_condition = InitialCondition::RandomSolenoidal {
            seed: 9,
            spectrum_slope: -5.0 / 3.0,
            amplitude: 0.5,
        };
        cfg.magnetic_initial_condition = Some(InitialCondition::OrszagTang);
        cfg.forcing = Some(ForcingSpec::LowMode { amplitude: 0.25 });
        cfg.sweep = Some(SweepSpec {
            alphas: vec![0.2, 0.1],
            lp: vec![2.0],
        });
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_str(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_alphas_must_decrease() {
        let up = serde_json::json!({"alphas": [0.1, 0.2]});
        assert_eq!(
            rejected_key(&with("sweep", up)).as_deref(),
            Some("sweep.alphas")
        );
        let ok = serde_json::json!({"alphas": [0.2, 0.1]});
        assert_eq!(
            parse_str(&with("sweep", ok)).unwrap().sweep.unwrap().lp,
            vec![2.0, 3.0]
        );
    }

    #[test]
    fn seed_override_touches_only_random_data() {
        let mut cfg = parse_str(BASE).unwrap();
        cfg.override_seed(5);
        assert_eq!(
            cfg.initial_condition,
            InitialCondition::TaylorGreen { amplitude: 1.0 }
        );
        cfg.initial_condition = InitialCondition::RandomSolenoidal {
            seed: 0,
            spectrum_slope: -2.0,
            amplitude: 1.0,
        };
        cfg.override_seed(5);
        assert!(matches!(
            cfg.initial_condition,
            InitialCondition::RandomSolenoidal { seed: 5, .. }
        ));
    }
}
