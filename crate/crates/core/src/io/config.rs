use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::assembly::{build_ninebus, build_sdcib, NineBusParams, SdcibParams, SystemModel};
use crate::dcchain::FullOrderParams;
use crate::fullorder::ValidationOptions;
use crate::paramstore::apply_overrides;
use crate::tuning::TuningSpec;
use crate::workload::Scaling;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    Sdcib,
    Ninebus,
}

/// Declared in dependency order; the runner sorts requests by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Equilibrium,
    Modes,
    Poa,
    Simulate,
    Spectrum,
    Sweep,
    ValidateFullorder,
    Tune,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Equilibrium => "equilibrium",
            Analysis::Modes => "modes",
            Analysis::Poa => "poa",
            Analysis::Simulate => "simulate",
            Analysis::Spectrum => "spectrum",
            Analysis::Sweep => "sweep",
            Analysis::ValidateFullorder => "validate-fullorder",
            Analysis::Tune => "tune",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            tol: crate::equilibrium::DEFAULT_TOL,
            max_iter: crate::equilibrium::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoaOptions {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
}

impl Default for PoaOptions {
    fn default() -> Self {
        PoaOptions {
            f_min: 0.01,
            f_max: 1000.0,
            points: 400,
        }
    }
}

impl PoaOptions {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.f_min > 0.0 && self.f_max > self.f_min) || self.points < 2 {
            return Err(Error::Config("poa: need 0 < f_min < f_max and points >= 2".into()));
        }
        Ok(crate::smallsignal::log_grid(self.f_min, self.f_max, self.points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    /// `constant[:v]`, `step:t0:[from:]to`, `sine:amp:f`,
    /// `sine:amp:t1=f1,t2=f2,...` or `trace[:path]`; levels default to p_load
    pub input: String,
    pub t_end: f64,
    /// defaults to 1 ms
    pub dt: Option<f64>,
    pub record_stride: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            input: "constant".into(),
            t_end: 5.0,
            dt: None,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOptions {
    pub path: PathBuf,
    #[serde(default)]
    pub scaling: Scaling,
    /// resampling step, defaults to the simulation step
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    /// trace columns; empty means `w` plus every output
    pub signals: Vec<String>,
    /// defaults to the second half of the simulation
    pub window: Option<[f64; 2]>,
    pub f_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    #[default]
    VsiBandwidth,
    Load,
    Scr,
}

impl SweepFamily {
    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::VsiBandwidth => "vsi_bandwidth",
            SweepFamily::Load => "load",
            SweepFamily::Scr => "scr",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepFamily::VsiBandwidth => vec![100.0, 80.0, 60.0, 50.0, 40.0, 30.0],
            SweepFamily::Load => vec![0.2, 0.4, 0.6, 0.8, 1.0],
            SweepFamily::Scr => vec![5.234, 4.0, 3.0, 2.0, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub family: SweepFamily,
    pub values: Option<Vec<f64>>,
    pub top_k: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            family: SweepFamily::default(),
            values: None,
            top_k: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLoop {
    pub name: String,
    #[serde(flatten)]
    pub spec: TuningSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub equilibrium: EquilibriumOptions,
    pub poa: PoaOptions,
    pub simulate: SimulateOptions,
    pub trace: Option<TraceOptions>,
    pub spectrum: SpectrumOptions,
    pub sweep: SweepOptions,
    pub validate: ValidationOptions,
    /// extra loops for `tune`, on top of the built-in controller list
    pub tune: Vec<NamedLoop>,
}

/// One scenario file. Parameter overrides use dotted names into the
/// topology's parameter tree (`dcchain.vsi.kp_v`); `full.*` addresses the
/// full-order PSU / DC-DC parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub topology: Topology,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub overrides: toml::Table,
    #[serde(default)]
    pub options: AnalysisOptions,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Relative paths inside the file (trace, out_dir) resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if let Some(t) = cfg.options.trace.as_mut() {
            if t.path.is_relative() {
                t.path = dir.join(&t.path);
            }
        }
        if let Some(o) = cfg.out_dir.as_mut() {
            if o.is_relative() {
                *o = dir.join(&*o);
            }
        }
        Ok(cfg)
    }

    /// Overrides from the file as dotted leaves, in file order.
    pub fn override_list(&self) -> Vec<(String, Value)> {
        let mut out = Vec::new();
        leaves("", &self.overrides, &mut out);
        out
    }

    /// Effective parameters after file overrides, then `extra`.
    pub fn resolve(&self, extra: &[(String, Value)]) -> Result<Resolved> {
        let all: Vec<(String, Value)> = self.override_list().into_iter().chain(extra.iter().cloned()).collect();
        let (full_ov, model_ov): (Vec<_>, Vec<_>) = all.iter().cloned().partition(|(k, _)| k.starts_with("full."));
        let full_ov: Vec<(String, Value)> = full_ov
            .into_iter()
            .map(|(k, v)| (k["full.".len()..].to_string(), v))
            .collect();
        let full = apply_overrides(&FullOrderParams::default(), &full_ov)?;
        let model = match self.topology {
            Topology::Sdcib => {
                let p = apply_overrides(&SdcibParams::default(), &model_ov)?;
                p.validate()?;
                ModelParams::Sdcib(p)
            }
            Topology::Ninebus => {
                let p = apply_overrides(&NineBusParams::default(), &model_ov)?;
                p.validate()?;
                ModelParams::NineBus(Box::new(p))
            }
        };
        Ok(Resolved {
            model,
            full,
            overrides: all,
        })
    }
}

fn leaves(prefix: &str, t: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in t {
        let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(sub) => leaves(&name, sub, out),
            _ => out.push((name, v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Sdcib(SdcibParams),
    NineBus(Box<NineBusParams>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelParams,
    pub full: FullOrderParams,
    /// file overrides followed by command-line ones, as applied
    pub overrides: Vec<(String, Value)>,
}

impl Resolved {
    pub fn build(&self) -> Result<SystemModel> {
        match &self.model {
            ModelParams::Sdcib(p) => build_sdcib(p),
            ModelParams::NineBus(p) => build_ninebus(p),
        }
    }

    pub fn p_load(&self) -> f64 {
        match &self.model {
            ModelParams::Sdcib(p) => p.p_load,
            ModelParams::NineBus(p) => p.p_load,
        }
    }

    pub fn sdcib(&self) -> Option<&SdcibParams> {
        match &self.model {
            ModelParams::Sdcib(p) => Some(p),
            _ => None,
        }
    }

    /// Full parameter tree (including `full`) as TOML.
    pub fn parameter_tree(&self) -> Result<toml::Table> {
        let mut t = match &self.model {
            ModelParams::Sdcib(p) => toml::Table::try_from(p),
            ModelParams::NineBus(p) => toml::Table::try_from(p.as_ref()),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        t.insert(
            "full".into(),
            Value::try_from(self.full).map_err(|e| Error::Config(e.to_string()))?,
        );
        Ok(t)
    }
}
