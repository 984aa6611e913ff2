//! Experiment configuration (TOML).
//!
//! Input paths inside a config (`plant.file`, `identification.dataset`,
//! `model.file`) are resolved against the config file's directory;
//! `output_dir` is taken relative to the working directory.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use ehsa_core::control::{CriticalGainOptions, NpidConfig, PidGains};
use ehsa_core::plant::{bandwidth, linearized_tf, PlantParams};
use ehsa_core::signals::SignalParams;
use ehsa_core::sysid::{ArxOrders, Detrend, IdentifyOptions, InitialHistory, OrderGrid, SplitSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Reserved; every pipeline is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub plant: Option<PlantSection>,
    pub excitation: Option<SignalParams>,
    #[serde(default)]
    pub identification: IdentificationSection,
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub validation: ValidationSection,
    pub controller: Option<ControllerSection>,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// Parameter file applied over the built-in defaults.
    pub file: Option<PathBuf>,
    /// `key = "value unit"` entries applied after `file`.
    #[serde(default)]
    pub values: BTreeMap<String, String>,
    /// Bandwidth that anchors the excitation band, rad/s, or `"auto"`.
    #[serde(default)]
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Value(f64),
    Named(String),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Self::Value(TAU)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSection {
    /// Dataset CSV (`t,u,y`) used instead of simulating the excitation.
    pub dataset: Option<PathBuf>,
    pub orders: Option<[usize; 3]>,
    pub search: Option<OrderGrid>,
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default = "default_ts")]
    pub ts: f64,
    #[serde(default = "default_detrend")]
    pub detrend: Detrend,
    #[serde(default)]
    pub history: InitialHistory,
}

fn default_split() -> f64 {
    0.8
}

fn default_ts() -> f64 {
    0.05
}

fn default_detrend() -> Detrend {
    Detrend::None
}

impl Default for IdentificationSection {
    fn default() -> Self {
        Self {
            dataset: None,
            orders: None,
            search: None,
            split: default_split(),
            ts: default_ts(),
            detrend: default_detrend(),
            history: InitialHistory::default(),
        }
    }
}

impl IdentificationSection {
    pub fn grid(&self) -> Result<OrderGrid> {
        match (&self.orders, &self.search) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "[identification] takes either `orders` or `search`, not both".into(),
            )),
            (None, Some(grid)) => Ok(grid.clone()),
            (Some([na, nb, nk]), None) => Ok(OrderGrid::single(ArxOrders::new(*na, *nb, *nk))),
            (None, None) => Ok(OrderGrid::single(ArxOrders::new(3, 3, 1))),
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        Ok(SplitSpec::new(self.split)?)
    }

    pub fn options(&self) -> IdentifyOptions {
        IdentifyOptions {
            detrend: self.detrend,
            history: self.history,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Model file written by `identify`.
    pub file: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "default_validation_signals")]
    pub signals: Vec<String>,
    #[serde(default = "default_validation_amplitudes")]
    pub amplitudes: Vec<f64>,
    /// Hz.
    #[serde(default = "default_validation_frequencies")]
    pub frequencies: Vec<f64>,
    #[serde(default = "default_validation_duration")]
    pub duration: f64,
}

fn default_validation_signals() -> Vec<String> {
    ["triangular", "square", "sine", "sawtooth"].map(String::from).to_vec()
}

fn default_validation_amplitudes() -> Vec<f64> {
    vec![1.0, 5.0, 9.0]
}

fn default_validation_frequencies() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}

fn default_validation_duration() -> f64 {
    20.0
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            signals: default_validation_signals(),
            amplitudes: default_validation_amplitudes(),
            frequencies: default_validation_frequencies(),
            duration: default_validation_duration(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Gains {
    Manual(PidGains),
    /// `"auto-zn"`: Ziegler-Nichols from a critical-gain search.
    Named(String),
}

impl Gains {
    pub fn is_auto(&self) -> Result<bool> {
        match self {
            Self::Manual(_) => Ok(false),
            Self::Named(s) if s == "auto-zn" => Ok(true),
            Self::Named(s) => Err(CliError::Config(format!(
                "controller gains must be a table {{kp, ki, kd}} or \"auto-zn\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneOn {
    #[default]
    Identified,
    Nonlinear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub gains: Gains,
    /// Factors applied to the Ziegler-Nichols `[kp, ki, kd]`.
    #[serde(default = "default_scale")]
    pub scale: [f64; 3],
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_k2")]
    pub k2: f64,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub derivative_filter_tau: Option<f64>,
    #[serde(default = "default_true")]
    pub anti_windup: bool,
    /// Reference signal; its `dt` is the control period and must equal the model's.
    pub reference: Option<SignalParams>,
    #[serde(default)]
    pub zn: ZnSection,
    #[serde(default)]
    pub tune_on: TuneOn,
}

fn default_scale() -> [f64; 3] {
    [1.0; 3]
}

fn default_k0() -> f64 {
    1.0
}

fn default_k1() -> f64 {
    3.0
}

fn default_k2() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZnSection {
    #[serde(default = "default_k_low")]
    pub k_low: f64,
    #[serde(default = "default_k_high")]
    pub k_high: f64,
    #[serde(default = "default_zn_duration")]
    pub duration: f64,
    #[serde(default = "default_step")]
    pub amplitude: f64,
}

fn default_k_low() -> f64 {
    1.0
}

fn default_k_high() -> f64 {
    1e7
}

fn default_zn_duration() -> f64 {
    20.0
}

fn default_step() -> f64 {
    1e-3
}

impl Default for ZnSection {
    fn default() -> Self {
        Self {
            k_low: default_k_low(),
            k_high: default_k_high(),
            duration: default_zn_duration(),
            amplitude: default_step(),
        }
    }
}

impl ControllerSection {
    /// Controller with the given PID gains and this section's constants and limits.
    pub fn npid(&self, gains: PidGains, input_limit: f64) -> Result<NpidConfig> {
        let config = NpidConfig {
            gains,
            k0: self.k0,
            k1: self.k1,
            k2: self.k2,
            u_min: self.u_min.unwrap_or(-input_limit),
            u_max: self.u_max.unwrap_or(input_limit),
            derivative_filter_tau: self.derivative_filter_tau,
            anti_windup: self.anti_windup,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn critical_gain_options(&self, dt: f64) -> CriticalGainOptions {
        CriticalGainOptions {
            amplitude: self.zn.amplitude,
            ..CriticalGainOptions::new(self.zn.k_low, self.zn.k_high, dt, self.zn.duration)
        }
    }

    /// The configured reference, or a step of `zn.amplitude` lasting `zn.duration`.
    pub fn reference(&self, dt: f64) -> SignalParams {
        self.reference.clone().unwrap_or_else(|| {
            let mut p = SignalParams::new("step", self.zn.duration, dt);
            p.amplitude = Some(self.zn.amplitude);
            p
        })
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub signal: Option<String>,
    pub orders: Option<ArxOrders>,
    pub split: Option<f64>,
    pub gains: Option<Gains>,
}

/// Which section `--signal` applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalTarget {
    Excitation,
    Validation,
    Reference,
}

/// Parses `na,nb,nk`.
pub fn parse_orders(s: &str) -> Result<ArxOrders> {
    let v = parse_list::<usize>(s, "orders")?;
    match v[..] {
        [na, nb, nk] => Ok(ArxOrders::new(na, nb, nk)),
        _ => Err(CliError::Config(format!("--orders takes na,nb,nk, got `{s}`"))),
    }
}

/// Parses `kp,ki,kd` or `auto-zn`.
pub fn parse_gains(s: &str) -> Result<Gains> {
    if s.trim() == "auto-zn" {
        return Ok(Gains::Named("auto-zn".into()));
    }
    let v = parse_list::<f64>(s, "gains")?;
    match v[..] {
        [kp, ki, kd] => Ok(Gains::Manual(PidGains { kp, ki, kd })),
        _ => Err(CliError::Config(format!("--gains takes kp,ki,kd or auto-zn, got `{s}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--{what}: cannot parse `{x}`")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn apply(&mut self, o: &Overrides, signal_target: SignalTarget) -> Result<()> {
        if let Some(kind) = &o.signal {
            match signal_target {
                SignalTarget::Excitation => self.excitation_mut()?.kind = kind.clone(),
                SignalTarget::Validation => self.validation.signals = vec![kind.clone()],
                SignalTarget::Reference => {
                    let ts = self.identification.ts;
                    let c = self.controller_mut()?;
                    let mut r = c.reference(c.reference.as_ref().map_or(ts, |r| r.dt));
                    r.kind = kind.clone();
                    c.reference = Some(r);
                }
            }
        }
        if let Some(orders) = o.orders {
            self.identification.orders = Some([orders.na, orders.nb, orders.nk]);
            self.identification.search = None;
        }
        if let Some(split) = o.split {
            self.identification.split = split;
        }
        if let Some(gains) = &o.gains {
            self.controller_mut()?.gains = gains.clone();
        }
        Ok(())
    }

    fn excitation_mut(&mut self) -> Result<&mut SignalParams> {
        self.excitation.as_mut().ok_or_else(|| missing("excitation"))
    }

    fn controller_mut(&mut self) -> Result<&mut ControllerSection> {
        self.controller.as_mut().ok_or_else(|| missing("controller"))
    }

    pub fn controller(&self) -> Result<&ControllerSection> {
        self.controller.as_ref().ok_or_else(|| missing("controller"))
    }

    pub fn plant_section(&self) -> Result<&PlantSection> {
        self.plant.as_ref().ok_or_else(|| missing("plant"))
    }

    /// Defaults, then the parameter file, then inline values.
    pub fn plant_params(&self) -> Result<PlantParams> {
        let section = self.plant_section()?;
        let mut params = PlantParams::default();
        if let Some(file) = &section.file {
            let path = self.resolve(file);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            params = params
                .with_overrides(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        let inline: String = section
            .values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        params = params
            .with_overrides(&inline)
            .map_err(|e| CliError::Config(format!("[plant.values]: {e}")))?;
        Ok(params)
    }

    /// Bandwidth in rad/s.
    pub fn bandwidth(&self, params: &PlantParams) -> Result<f64> {
        match &self.plant_section()?.bandwidth {
            Bandwidth::Value(w) if w.is_finite() && *w > 0.0 => Ok(*w),
            Bandwidth::Value(w) => Err(CliError::Config(format!(
                "plant bandwidth must be positive, got {w}"
            ))),
            Bandwidth::Named(s) if s == "auto" => Ok(bandwidth(&linearized_tf(params)?)?),
            Bandwidth::Named(s) => Err(CliError::Config(format!(
                "plant bandwidth must be a number in rad/s or \"auto\", got \"{s}\""
            ))),
        }
    }

    /// Excitation description with the plant bandwidth filled in.
    pub fn excitation(&self, params: &PlantParams) -> Result<SignalParams> {
        let mut spec = self.excitation.clone().ok_or_else(|| missing("excitation"))?;
        if spec.bandwidth.is_none() {
            spec.bandwidth = Some(self.bandwidth(params)?);
        }
        Ok(spec)
    }

    /// Checks the output directory can be created.
    pub fn check_output_dir(&self) -> Result<()> {
        if self.output_dir.exists() && !self.output_dir.is_dir() {
            return Err(CliError::Config(format!(
                "output_dir {} exists and is not a directory",
                self.output_dir.display()
            )));
        }
        Ok(())
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing [{section}] section"))
}
