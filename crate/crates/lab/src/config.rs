//! Scenario configuration: TOML sections with defaults for the reference
//! scenario, key-path diagnostics and dotted-path patching for sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use multidop_core::geometry::differenced_doppler;
use multidop_core::math::rad;
use multidop_core::{
    DopplerConvention, EstimatorConfig, GammaRecursionAoa, LmOptions, Scene, SmoothingMode, Vec2D,
};

use crate::channel::{dbm_per_hz_to_watts, rcs_log_params_from_moments, LinkBudget};
use crate::sim::{ImpairmentPolicy, SimSetup};
use crate::waveform::WaveformConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("cannot apply `{path}`: {message}")]
    Patch { path: String, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub num_resource_blocks: usize,
    pub fft_size: usize,
    pub slot_duration_s: f64,
    pub pilot_comb_step: usize,
    pub pilots_per_slot: usize,
    pub oversampling: usize,
}

impl Default for WaveformSection {
    fn default() -> Self {
        let w = WaveformConfig::default();
        Self {
            carrier_frequency_hz: w.carrier_frequency,
            subcarrier_spacing_hz: w.subcarrier_spacing,
            num_resource_blocks: w.num_resource_blocks,
            fft_size: w.fft_size,
            slot_duration_s: w.slot_duration,
            pilot_comb_step: w.pilot_comb_step,
            pilots_per_slot: w.pilots_per_slot,
            oversampling: crate::cir::DEFAULT_OVERSAMPLING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetSection {
    pub tx_power_w: f64,
    pub noise_density_dbm_per_hz: f64,
    /// Mean and variance of the RCS itself (m², m⁴).
    pub rcs_mean_m2: f64,
    pub rcs_variance_m4: f64,
    /// Replaces the lognormal draw when set.
    pub fixed_rcs_m2: Option<f64>,
}

impl Default for LinkBudgetSection {
    fn default() -> Self {
        Self {
            tx_power_w: 0.2,
            noise_density_dbm_per_hz: -174.0,
            rcs_mean_m2: 50.0,
            rcs_variance_m4: 100.0,
            fixed_rcs_m2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentSection {
    pub aoa_noise_deg: f64,
    pub cfo_max_hz: f64,
    pub to_max_ns: f64,
    pub awgn: bool,
}

impl Default for ImpairmentSection {
    fn default() -> Self {
        let p = ImpairmentPolicy::default();
        Self { aoa_noise_deg: p.aoa_noise_deg, cfo_max_hz: p.cfo_max_hz, to_max_ns: p.to_max_s * 1e9, awgn: p.awgn }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub tx: [f64; 2],
    pub target: [f64; 2],
    pub rx: Vec<[f64; 2]>,
    pub tx_speed_mps: f64,
    pub tx_heading_deg: f64,
    pub target_speed_mps: f64,
    pub target_heading_deg: f64,
    /// Rescales the receiver layout about `rx_anchor` so the mean spacing
    /// between consecutive receivers equals this value.
    pub rx_spacing_m: Option<f64>,
    /// One-based receiver kept fixed by `rx_spacing_m`.
    pub rx_anchor: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            tx: [8.0, 0.0],
            target: [12.0, -12.0],
            rx: vec![[15.0, 4.0], [15.0, 2.0], [15.0, 0.0], [15.0, -2.0]],
            tx_speed_mps: 4.0,
            tx_heading_deg: 225.0,
            target_speed_mps: 4.0,
            target_heading_deg: 315.0,
            rx_spacing_m: None,
            rx_anchor: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConventionName {
    #[default]
    DerivativeConsistent,
    NoBistaticFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaAoaName {
    #[default]
    Target,
    Tx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingName {
    #[default]
    Velocity,
    SpeedAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub steps: u64,
    pub window: usize,
    pub runs_per_point: usize,
    pub base_seed: u64,
    pub doppler_convention: ConventionName,
    pub gamma_recursion_aoa: GammaAoaName,
    /// One-based receiver at which the Doppler is estimated and scored.
    pub reference_rx: usize,
    pub allow_underdetermined: bool,
    pub smoothing: SmoothingName,
    /// Average the reference bistatic angle over the window.
    pub smooth_beta: bool,
    pub max_speed_mps: f64,
    pub analytic_jacobian: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            steps: 5000,
            window: 500,
            runs_per_point: 12,
            base_seed: 1,
            doppler_convention: ConventionName::default(),
            gamma_recursion_aoa: GammaAoaName::default(),
            reference_rx: 1,
            allow_underdetermined: false,
            smoothing: SmoothingName::default(),
            smooth_beta: true,
            max_speed_mps: multidop_core::estimator::DEFAULT_MAX_SPEED,
            analytic_jacobian: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub waveform: WaveformSection,
    pub link_budget: LinkBudgetSection,
    pub impairments: ImpairmentSection,
    pub geometry: GeometrySection,
    pub run: RunSection,
}

/// Reads, merges over the defaults and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    ScenarioConfig::from_table(load_table(path)?)
}

/// The file's table merged over the defaults; the starting point for patches.
pub fn load_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    let file: toml::Table = toml::from_str(text)?;
    let mut table = default_table();
    merge(&mut table, file);
    Ok(table)
}

pub fn default_table() -> toml::Table {
    toml::Table::try_from(ScenarioConfig::default()).expect("defaults serialize")
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses a sweep or override value as a TOML literal; bare words become
/// strings.
pub fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.trim().to_string()),
    }
}

/// Sets `path` (dot-separated; numeric segments index arrays) in `table`.
/// A missing leaf key is inserted so optional fields can be set; unknown
/// names are then rejected when the table is deserialized.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let err = |message: &str| ConfigError::Patch { path: path.to_string(), message: message.to_string() };
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err("empty path segment"));
    }
    let (last, init) = parts.split_last().expect("split yields at least one segment");
    let Some((section, rest)) = init.split_first() else {
        return Err(err("a path names a key inside a section"));
    };
    let mut cursor = table.get_mut(*section).ok_or_else(|| err(&format!("unknown section `{section}`")))?;
    for seg in rest {
        cursor = match cursor {
            toml::Value::Table(t) => t.get_mut(*seg).ok_or_else(|| err(&format!("unknown key `{seg}`")))?,
            toml::Value::Array(a) => index_mut(a, seg).map_err(|m| err(&m))?,
            _ => return Err(err(&format!("cannot descend into a scalar at `{seg}`"))),
        };
    }
    match cursor {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => *index_mut(a, last).map_err(|m| err(&m))? = value,
        _ => return Err(err(&format!("cannot descend into a scalar at `{last}`"))),
    }
    Ok(())
}

fn index_mut<'a>(a: &'a mut [toml::Value], seg: &str) -> Result<&'a mut toml::Value, String> {
    let i: usize = seg.parse().map_err(|_| format!("`{seg}` is not an array index"))?;
    let len = a.len();
    a.get_mut(i).ok_or_else(|| format!("index {i} out of range for length {len}"))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_table(parse_table(text)?)
    }

    /// Deserializes with key-path diagnostics, then validates.
    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            ConfigError::Field { path: e.path().to_string(), message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn waveform(&self) -> WaveformConfig {
        let w = &self.waveform;
        WaveformConfig {
            carrier_frequency: w.carrier_frequency_hz,
            subcarrier_spacing: w.subcarrier_spacing_hz,
            num_resource_blocks: w.num_resource_blocks,
            fft_size: w.fft_size,
            slot_duration: w.slot_duration_s,
            pilot_comb_step: w.pilot_comb_step,
            pilots_per_slot: w.pilots_per_slot,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.waveform().wavelength()
    }

    pub fn convention(&self) -> DopplerConvention {
        match self.run.doppler_convention {
            ConventionName::DerivativeConsistent => DopplerConvention::DerivativeConsistent,
            ConventionName::NoBistaticFactor => DopplerConvention::NoBistaticFactor,
        }
    }

    pub fn budget(&self) -> LinkBudget {
        let b = &self.link_budget;
        LinkBudget {
            tx_power: b.tx_power_w,
            noise_density: dbm_per_hz_to_watts(b.noise_density_dbm_per_hz),
            rcs_log_params: rcs_log_params_from_moments(b.rcs_mean_m2, b.rcs_variance_m4),
        }
    }

    /// Receiver positions after the optional spacing rescale.
    pub fn receivers(&self) -> Result<Vec<Vec2D>, ConfigError> {
        let g = &self.geometry;
        let rx: Vec<Vec2D> = g.rx.iter().map(|p| Vec2D::new(p[0], p[1])).collect();
        let Some(spacing) = g.rx_spacing_m else {
            return Ok(rx);
        };
        if !(spacing > 0.0) {
            return Err(invalid("geometry.rx_spacing_m", "must be positive"));
        }
        if rx.len() < 2 {
            return Err(invalid("geometry.rx_spacing_m", "needs at least two receivers"));
        }
        let anchor = g
            .rx_anchor
            .checked_sub(1)
            .and_then(|i| rx.get(i).copied())
            .ok_or_else(|| invalid("geometry.rx_anchor", format!("must be in 1..={}", rx.len())))?;
        let mean = rx.windows(2).map(|w| w[0].distance(w[1])).sum::<f64>() / (rx.len() - 1) as f64;
        if !(mean > 0.0) {
            return Err(invalid("geometry.rx", "receivers coincide"));
        }
        let scale = spacing / mean;
        Ok(rx.iter().map(|&p| anchor + (p - anchor) * scale).collect())
    }

    pub fn scene(&self) -> Result<Scene, ConfigError> {
        let g = &self.geometry;
        Scene::new(
            Vec2D::new(g.tx[0], g.tx[1]),
            Vec2D::new(g.target[0], g.target[1]),
            self.receivers()?,
            Vec2D::from_polar(g.tx_speed_mps, rad(g.tx_heading_deg)),
            Vec2D::from_polar(g.target_speed_mps, rad(g.target_heading_deg)),
            self.waveform.slot_duration_s,
        )
        .map_err(|e| invalid("geometry", e.to_string()))
    }

    pub fn sim_setup(&self) -> SimSetup {
        let i = &self.impairments;
        SimSetup {
            waveform: self.waveform(),
            budget: self.budget(),
            policy: ImpairmentPolicy {
                aoa_noise_deg: i.aoa_noise_deg,
                cfo_max_hz: i.cfo_max_hz,
                to_max_s: i.to_max_ns * 1e-9,
                awgn: i.awgn,
                fixed_rcs: self.link_budget.fixed_rcs_m2,
            },
            convention: self.convention(),
            num_steps: self.run.steps,
            reference_rx: self.run.reference_rx - 1,
            oversampling: self.waveform.oversampling,
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let r = &self.run;
        EstimatorConfig {
            wavelength: self.wavelength(),
            slot_duration: self.waveform.slot_duration_s,
            window: r.window,
            convention: self.convention(),
            gamma_recursion: match r.gamma_recursion_aoa {
                GammaAoaName::Target => GammaRecursionAoa::Target,
                GammaAoaName::Tx => GammaRecursionAoa::Tx,
            },
            lm: LmOptions::default(),
            analytic_jacobian: r.analytic_jacobian,
            allow_underdetermined: r.allow_underdetermined,
            reference_rx: r.reference_rx - 1,
            smoothing: match r.smoothing {
                SmoothingName::Velocity => SmoothingMode::Velocity,
                SmoothingName::SpeedAngle => SmoothingMode::SpeedAngle,
            },
            smooth_beta: r.smooth_beta,
            max_speed: r.max_speed_mps,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.waveform().validate().map_err(|e| invalid("waveform", e.to_string()))?;
        if self.waveform.oversampling == 0 {
            return Err(invalid("waveform.oversampling", "must be at least 1"));
        }
        self.budget().validate().map_err(|e| invalid("link_budget", e.to_string()))?;
        let b = &self.link_budget;
        if !(b.rcs_mean_m2 > 0.0) || !(b.rcs_variance_m4 >= 0.0) {
            return Err(invalid("link_budget.rcs_mean_m2", "RCS mean must be positive and variance non-negative"));
        }
        if matches!(b.fixed_rcs_m2, Some(r) if !(r >= 0.0)) {
            return Err(invalid("link_budget.fixed_rcs_m2", "must be non-negative"));
        }
        let i = &self.impairments;
        if !(i.aoa_noise_deg >= 0.0) {
            return Err(invalid("impairments.aoa_noise_deg", "must be non-negative"));
        }
        if !(i.cfo_max_hz >= 0.0) || !(i.to_max_ns >= 0.0) {
            return Err(invalid("impairments", "CFO and TO bounds must be non-negative"));
        }

        let r = &self.run;
        let n_rx = self.geometry.rx.len();
        if n_rx < 4 && !r.allow_underdetermined {
            return Err(invalid(
                "geometry.rx",
                format!("{n_rx} receivers cannot determine the 4 unknowns; at least 4 are required (set run.allow_underdetermined to override)"),
            ));
        }
        if r.steps < 2 {
            return Err(invalid("run.steps", "at least 2 steps are required"));
        }
        if r.window == 0 {
            return Err(invalid("run.window", "must be at least 1"));
        }
        if r.runs_per_point == 0 {
            return Err(invalid("run.runs_per_point", "must be at least 1"));
        }
        if r.reference_rx == 0 || r.reference_rx > n_rx {
            return Err(invalid("run.reference_rx", format!("must be in 1..={n_rx}")));
        }
        if !(r.max_speed_mps > 0.0) {
            return Err(invalid("run.max_speed_mps", "must be positive"));
        }

        let scene = self.scene()?;
        let last = scene.advance(r.steps - 1);
        last.validate().map_err(|e| invalid("geometry", format!("scene degenerates before the last step: {e}")))?;
        self.check_aliasing(&scene)
    }

    /// The per-slot phase increment must stay within ±π: every receiver's
    /// net differenced Doppler below 1/(2T) at every step.
    fn check_aliasing(&self, scene: &Scene) -> Result<(), ConfigError> {
        let limit = 0.5 / self.waveform.slot_duration_s;
        let lambda = self.wavelength();
        for k in 0..self.run.steps {
            let s = scene.advance(k);
            for n in 0..s.num_rx() {
                let f = differenced_doppler(&s, n, lambda, self.convention())
                    .map_err(|e| invalid("geometry", e.to_string()))?;
                if f.abs() >= limit {
                    return Err(invalid(
                        "geometry",
                        format!("net Doppler {f:.1} Hz at RX {} step {k} exceeds the ±{limit:.0} Hz per-slot limit", n + 1),
                    ));
                }
            }
        }
        Ok(())
    }
}
