//! Scenario configuration, read from TOML.

use std::path::Path;

use gcilsm_core::filter::{
    AdaptiveBirthParams, MotionModel, PriorBirthParams, Region, SensorModel, UpdateParams,
};
use gcilsm_core::fusion::NetworkTopology;
use gcilsm_core::matching::MatchParams;
use gcilsm_core::ospa::OspaParams;
use gcilsm_core::ReductionParams;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of scans.
    pub duration: u32,
    pub mc_runs: u32,
    pub seed: u64,
    pub motion: MotionConfig,
    pub sensors: Vec<SensorConfig>,
    /// Undirected communication links between sensor indices.
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    pub targets: Vec<TargetConfig>,
    pub birth: BirthConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub gm: GmConfig,
    #[serde(default)]
    pub ospa: OspaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    /// Sampling period (s).
    #[serde(default = "default_period")]
    pub period: f64,
    /// Process noise standard deviation (m/s²).
    #[serde(default = "default_sigma_v")]
    pub sigma_v: f64,
    #[serde(default = "default_survival")]
    pub survival_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl RegionConfig {
    pub fn to_region(self) -> Region {
        Region {
            x_min: self.x[0],
            x_max: self.x[1],
            y_min: self.y[0],
            y_max: self.y[1],
        }
    }
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            x: [-1000.0, 1000.0],
            y: [-1000.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// Measurement noise standard deviation (m).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_detect_prob")]
    pub detect_prob: f64,
    /// Mean clutter count per scan.
    #[serde(default = "default_clutter_rate")]
    pub clutter_rate: f64,
    /// Clutter region.
    #[serde(default)]
    pub region: RegionConfig,
    /// Area in which targets can be detected; the whole plane when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_of_view: Option<RegionConfig>,
}

impl SensorConfig {
    pub fn model(&self) -> SensorModel {
        SensorModel::position(
            self.sigma,
            self.detect_prob,
            self.clutter_rate,
            self.region.to_region(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// First scan at which the target exists.
    pub birth: u32,
    /// First scan at which it no longer exists.
    pub death: u32,
    /// `[p_x, v_x, p_y, v_y]` at the birth scan.
    pub initial_state: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum BirthConfig {
    Adaptive {
        #[serde(default = "default_expected_births")]
        expected_births: f64,
        #[serde(default = "default_max_existence")]
        max_existence: f64,
        /// Diagonal of the birth covariance.
        #[serde(default = "default_birth_cov")]
        covariance_diag: [f64; 4],
    },
    Prior {
        /// Full birth states `[p_x, v_x, p_y, v_y]`.
        states: Vec<[f64; 4]>,
        existence: f64,
        covariance_diag: [f64; 4],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub k_best: usize,
    pub gate: f64,
    /// Tracks below this existence are dropped after every update.
    pub existence_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            k_best: 100,
            gate: 25.0,
            existence_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    /// Local filters never see the fused result.
    #[default]
    None,
    /// Each node continues from its fused posterior plus its own unmatched tracks.
    Fused,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub alpha: f64,
    pub non_assignment_cost: f64,
    pub feedback: Feedback,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            non_assignment_cost: 2.0,
            feedback: Feedback::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmConfig {
    pub hypothesis_truncation: f64,
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub max_components: usize,
}

impl Default for GmConfig {
    fn default() -> Self {
        Self {
            hypothesis_truncation: 1e-4,
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OspaConfig {
    pub order: f64,
    pub cutoff: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self {
            order: 1.0,
            cutoff: 100.0,
        }
    }
}

fn default_period() -> f64 {
    1.0
}
fn default_sigma_v() -> f64 {
    5.0
}
fn default_survival() -> f64 {
    0.99
}
fn default_sigma() -> f64 {
    1.4
}
fn default_detect_prob() -> f64 {
    0.99
}
fn default_clutter_rate() -> f64 {
    10.0
}
fn default_expected_births() -> f64 {
    0.1
}
fn default_max_existence() -> f64 {
    0.5
}
fn default_birth_cov() -> [f64; 4] {
    [100.0; 4]
}

fn field(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn check_region(path: &str, r: &RegionConfig) -> Result<()> {
    if !(r.x[0] < r.x[1] && r.y[0] < r.y[1]) || r.x.iter().chain(&r.y).any(|v| !v.is_finite()) {
        return Err(field(path, "bounds must be finite with min < max"));
    }
    Ok(())
}

fn check_probability(path: String, p: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&p)
    } else {
        p > 0.0 && p <= 1.0
    };
    if !ok {
        let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
        return Err(field(path, format!("{p} outside {range}")));
    }
    Ok(())
}

fn check_positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(field(path, format!("{v} must be a positive finite number")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Checks every field; errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        if self.duration == 0 {
            return Err(field("duration", "must be >= 1"));
        }
        if self.mc_runs == 0 {
            return Err(field("mc_runs", "must be >= 1"));
        }
        check_positive("motion.period", self.motion.period)?;
        if !(self.motion.sigma_v >= 0.0 && self.motion.sigma_v.is_finite()) {
            return Err(field(
                "motion.sigma_v",
                "must be a non-negative finite number",
            ));
        }
        check_probability(
            "motion.survival_prob".into(),
            self.motion.survival_prob,
            false,
        )?;

        if self.sensors.is_empty() {
            return Err(field("sensors", "at least one sensor is required"));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            check_positive(&format!("sensors[{i}].sigma"), s.sigma)?;
            check_probability(format!("sensors[{i}].detect_prob"), s.detect_prob, false)?;
            if !(s.clutter_rate >= 0.0 && s.clutter_rate.is_finite()) {
                return Err(field(
                    format!("sensors[{i}].clutter_rate"),
                    "must be a non-negative finite number",
                ));
            }
            check_region(&format!("sensors[{i}].region"), &s.region)?;
            if let Some(fov) = &s.field_of_view {
                check_region(&format!("sensors[{i}].field_of_view"), fov)?;
            }
        }
        for (e, [a, b]) in self.edges.iter().enumerate() {
            if *a >= self.sensors.len() || *b >= self.sensors.len() {
                return Err(field(
                    format!("edges[{e}]"),
                    "refers to a sensor that does not exist",
                ));
            }
            if a == b {
                return Err(field(format!("edges[{e}]"), "self-loops are not allowed"));
            }
        }
        self.topology().map_err(|e| field("edges", e.to_string()))?;

        for (i, t) in self.targets.iter().enumerate() {
            if t.death <= t.birth {
                return Err(field(
                    format!("targets[{i}].death"),
                    "must be greater than birth",
                ));
            }
            if t.death > self.duration {
                return Err(field(
                    format!("targets[{i}].death"),
                    "must not exceed duration",
                ));
            }
            if t.initial_state.iter().any(|v| !v.is_finite()) {
                return Err(field(
                    format!("targets[{i}].initial_state"),
                    "must be finite",
                ));
            }
        }

        match &self.birth {
            BirthConfig::Adaptive {
                expected_births,
                max_existence,
                covariance_diag,
            } => {
                check_positive("birth.expected_births", *expected_births)?;
                check_probability("birth.max_existence".into(), *max_existence, false)?;
                for (k, v) in covariance_diag.iter().enumerate() {
                    check_positive(&format!("birth.covariance_diag[{k}]"), *v)?;
                }
            }
            BirthConfig::Prior {
                states,
                existence,
                covariance_diag,
            } => {
                if states.is_empty() {
                    return Err(field(
                        "birth.states",
                        "at least one prior birth state is required",
                    ));
                }
                if states.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(field("birth.states", "must be finite"));
                }
                check_probability("birth.existence".into(), *existence, false)?;
                for (k, v) in covariance_diag.iter().enumerate() {
                    check_positive(&format!("birth.covariance_diag[{k}]"), *v)?;
                }
            }
        }

        if self.filter.k_best == 0 {
            return Err(field("filter.k_best", "must be >= 1"));
        }
        check_positive("filter.gate", self.filter.gate)?;
        check_probability(
            "filter.existence_threshold".into(),
            self.filter.existence_threshold,
            true,
        )?;

        if !(self.fusion.alpha > 0.0 && self.fusion.alpha < 1.0) {
            return Err(field("fusion.alpha", "must lie in (0, 1)"));
        }
        if !(self.fusion.non_assignment_cost > 0.0) {
            return Err(field("fusion.non_assignment_cost", "must be > 0"));
        }

        check_probability(
            "gm.hypothesis_truncation".into(),
            self.gm.hypothesis_truncation,
            true,
        )?;
        check_probability("gm.prune_threshold".into(), self.gm.prune_threshold, true)?;
        if !(self.gm.merge_threshold >= 0.0) {
            return Err(field("gm.merge_threshold", "must be >= 0"));
        }
        if self.gm.max_components == 0 {
            return Err(field("gm.max_components", "must be >= 1"));
        }

        if !(self.ospa.order >= 1.0 && self.ospa.order.is_finite()) {
            return Err(field("ospa.order", "must be a finite number >= 1"));
        }
        check_positive("ospa.cutoff", self.ospa.cutoff)?;
        Ok(())
    }

    pub fn motion_model(&self) -> MotionModel {
        MotionModel::constant_velocity(
            self.motion.period,
            self.motion.sigma_v,
            self.motion.survival_prob,
        )
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[a, b]| (a, b)).collect();
        Ok(NetworkTopology::new(0..self.sensors.len(), &edges)?)
    }

    pub fn reduction(&self) -> ReductionParams {
        ReductionParams {
            prune_threshold: self.gm.prune_threshold,
            merge_threshold: self.gm.merge_threshold,
            max_components: self.gm.max_components,
        }
    }

    pub fn update_params(&self) -> UpdateParams {
        UpdateParams {
            k_best: self.filter.k_best,
            gate: self.filter.gate,
            hypothesis_truncation: self.gm.hypothesis_truncation,
            reduction: self.reduction(),
        }
    }

    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            alpha: self.fusion.alpha,
            non_assignment_cost: self.fusion.non_assignment_cost,
            reduction: self.reduction(),
        }
    }

    pub fn ospa_params(&self) -> OspaParams {
        OspaParams {
            order: self.ospa.order,
            cutoff: self.ospa.cutoff,
        }
    }
}

/// Birth procedure resolved into filter parameters.
#[derive(Debug, Clone)]
pub enum BirthModel {
    Adaptive(AdaptiveBirthParams),
    Prior(PriorBirthParams),
}

impl BirthConfig {
    pub fn model(&self) -> BirthModel {
        match self {
            BirthConfig::Adaptive {
                expected_births,
                max_existence,
                covariance_diag,
            } => BirthModel::Adaptive(AdaptiveBirthParams::new(
                *expected_births,
                *max_existence,
                DMatrix::from_diagonal(&DVector::from_row_slice(covariance_diag)),
            )),
            BirthConfig::Prior {
                states,
                existence,
                covariance_diag,
            } => BirthModel::Prior(PriorBirthParams {
                states: states.iter().map(|s| DVector::from_row_slice(s)).collect(),
                existence: *existence,
                covariance: DMatrix::from_diagonal(&DVector::from_row_slice(covariance_diag)),
            }),
        }
    }
}
