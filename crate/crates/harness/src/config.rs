//! Experiment configuration in TOML. Every table rejects unknown keys, and
//! every field except `level` and `seed` has a default.
//!
//! ```toml
//! level = "micro"
//! seed = 42
//!
//! [time]
//! horizon = 10.0
//! dt = 0.02
//!
//! [cost]
//! sigma1 = 5e-3
//! sigma2 = 5e-1
//! ```

use crate::error::HarnessError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use swarm_core::icontrol::ArmijoParams;
use swarm_core::microsim::{agents_on_circle, ModelParams, Rect, VelocityInit};
use swarm_core::objective::slice_count;
use swarm_core::potentials::MorseParams;
use swarm_core::Point;

/// Upper bound on `grid.n^4` for mean-field runs; each phase-space copy
/// takes 8 bytes per cell and the solver keeps several.
pub const MAX_PHASE_CELLS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Micro,
    Meanfield,
}

impl LevelKind {
    pub fn name(self) -> &'static str {
        match self {
            LevelKind::Micro => "micro",
            LevelKind::Meanfield => "meanfield",
        }
    }
}

/// Cost weight settings. `S1` weights the variance term, `S2` the
/// destination term, `S3` mostly the destination with some variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    S1,
    S2,
    S3,
}

impl Preset {
    /// `(σ1, σ2)`.
    pub fn weights(self) -> (f64, f64) {
        match self {
            Preset::S1 => (9e-2, 1e-3),
            Preset::S2 => (1e-4, 9e-1),
            Preset::S3 => (5e-3, 5e-1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub level: LevelKind,
    pub seed: u64,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub crowd: CrowdConfig,
    #[serde(default)]
    pub agents: AgentConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { horizon: 10.0, dt: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrowdConfig {
    /// Number of particles of a micro run.
    pub particles: usize,
    pub support: SupportBox,
    pub velocity: VelocityInit,
}

impl Default for CrowdConfig {
    fn default() -> Self {
        Self { particles: 1000, support: SupportBox::default(), velocity: VelocityInit::Zero }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for SupportBox {
    fn default() -> Self {
        Self { x: [-10.0, 55.0], y: [-20.0, 55.0] }
    }
}

impl SupportBox {
    pub fn rect(&self) -> Rect<f64> {
        Rect::new(self.x[0], self.x[1], self.y[0], self.y[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub count: usize,
    /// Radius of the circle around the support center used when no
    /// explicit positions are given.
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { count: 9, radius: 60.0, positions: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Cells per direction, in both space and velocity. Micro runs use the
    /// spatial part for their density histograms.
    pub n: usize,
    pub lx: f64,
    pub lv: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 25, lx: 100.0, lv: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseConfig {
    pub attraction_strength: f64,
    pub repulsion_strength: f64,
    pub attraction_radius: f64,
    pub repulsion_radius: f64,
    #[serde(default = "default_regularization")]
    pub regularization: f64,
}

fn default_regularization() -> f64 {
    1e-3
}

impl From<MorseParams<f64>> for MorseConfig {
    fn from(p: MorseParams<f64>) -> Self {
        Self {
            attraction_strength: p.attraction_strength,
            repulsion_strength: p.repulsion_strength,
            attraction_radius: p.attraction_radius,
            repulsion_radius: p.repulsion_radius,
            regularization: p.regularization,
        }
    }
}

impl MorseConfig {
    pub fn params(&self) -> MorseParams<f64> {
        MorseParams::new(
            self.attraction_strength,
            self.repulsion_strength,
            self.attraction_radius,
            self.repulsion_radius,
            self.regularization,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub alpha: f64,
    pub sheep_sheep: MorseConfig,
    pub dog_sheep: MorseConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            sheep_sheep: MorseParams::sheep_sheep().into(),
            dog_sheep: MorseParams::dog_sheep().into(),
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams<f64> {
        ModelParams { alpha: self.alpha, sheep_sheep: self.sheep_sheep.params(), dog_sheep: self.dog_sheep.params() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub destination: [f64; 2],
    /// Desired variance as a multiple of the initial crowd variance.
    pub variance_factor: f64,
    /// Absolute desired variance; overrides `variance_factor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub desired_variance: Option<f64>,
}

impl Default for CostConfig {
    fn default() -> Self {
        let (s1, s2) = Preset::S3.weights();
        Self {
            sigma1: s1,
            sigma2: s2,
            sigma3: 1e-7,
            destination: [-20.0, -20.0],
            variance_factor: 0.9,
            desired_variance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub u_max: f64,
    /// With `false` the agents stay put (zero control on every slice).
    pub enabled: bool,
    pub armijo: ArmijoConfig,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { u_max: 5.0, enabled: true, armijo: ArmijoConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmijoConfig {
    pub initial_step: f64,
    pub gamma: f64,
    pub max_halvings: u32,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        let p = ArmijoParams::default();
        Self { initial_step: p.initial_step, gamma: p.gamma, max_halvings: p.max_halvings }
    }
}

impl ArmijoConfig {
    pub fn params(&self) -> ArmijoParams {
        ArmijoParams { initial_step: self.initial_step, gamma: self.gamma, max_halvings: self.max_halvings }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Density snapshot times; defaults to `{0, T/2, T}`, or the figure
    /// times `{3, 9, 12, 20, 40, T}` when `T = 55`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    /// Write a checkpoint every this many slices; 0 disables them.
    pub checkpoint_every: usize,
    /// Also dump the full phase-space density at snapshot times.
    pub phase_snapshots: bool,
}

impl ExperimentConfig {
    /// Defaults with the weights of `preset`.
    pub fn from_preset(preset: Preset, level: LevelKind, seed: u64) -> Self {
        let mut c = Self {
            level,
            seed,
            time: TimeConfig::default(),
            crowd: CrowdConfig::default(),
            agents: AgentConfig::default(),
            grid: GridConfig::default(),
            model: ModelConfig::default(),
            cost: CostConfig::default(),
            control: ControlConfig::default(),
            output: OutputConfig::default(),
        };
        c.apply_preset(preset);
        c
    }

    /// Sets the cost weights of `preset`; time and grid settings are kept.
    pub fn apply_preset(&mut self, preset: Preset) {
        let (s1, s2) = preset.weights();
        self.cost.sigma1 = s1;
        self.cost.sigma2 = s2;
        self.cost.sigma3 = 1e-7;
        self.cost.variance_factor = 0.9;
        self.cost.desired_variance = None;
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut e = Vec::new();
        let t = &self.time;
        if let Err(err) = slice_count(t.horizon, t.dt) {
            e.extend(err.messages().iter().map(|m| format!("time: {m}")));
        }
        if self.crowd.particles == 0 {
            e.push("crowd.particles must be >= 1".to_string());
        }
        let s = &self.crowd.support;
        if !(s.x[0] < s.x[1] && s.y[0] < s.y[1] && s.x.iter().chain(&s.y).all(|v| v.is_finite())) {
            e.push("crowd.support must be a non-degenerate finite box".to_string());
        }
        let g = &self.grid;
        if g.n < 4 {
            e.push(format!("grid.n must be >= 4, got {}", g.n));
        }
        if self.level == LevelKind::Meanfield && g.n.saturating_pow(4) > MAX_PHASE_CELLS {
            e.push(format!(
                "grid.n = {} gives {} phase-space cells, more than the {MAX_PHASE_CELLS} a mean-field run may allocate",
                g.n,
                g.n.saturating_pow(4)
            ));
        }
        if !(g.lx.is_finite() && g.lx > 0.0) {
            e.push("grid.lx must be > 0".to_string());
        }
        if !(g.lv.is_finite() && g.lv > 0.0) {
            e.push("grid.lv must be > 0".to_string());
        }
        if s.x.iter().chain(&s.y).any(|v| v.abs() > g.lx) {
            e.push("crowd.support must lie inside the spatial box [-grid.lx, grid.lx]²".to_string());
        }
        if let VelocityInit::Uniform { half_width } = self.crowd.velocity {
            if !(half_width > 0.0 && half_width <= g.lv) {
                e.push("crowd.velocity.half_width must lie in (0, grid.lv]".to_string());
            }
        }
        let a = &self.agents;
        if a.count == 0 {
            e.push("agents.count must be >= 1".to_string());
        }
        match &a.positions {
            Some(p) => {
                if p.len() != a.count {
                    e.push(format!("agents.positions has {} entries, agents.count is {}", p.len(), a.count));
                }
                if p.iter().flatten().any(|v| !v.is_finite()) {
                    e.push("agents.positions must be finite".to_string());
                }
            }
            None => {
                if !(a.radius.is_finite() && a.radius >= 0.0) {
                    e.push("agents.radius must be finite and >= 0".to_string());
                }
            }
        }
        self.model.params().validate(&mut e);
        let c = &self.cost;
        for (name, v) in [("sigma1", c.sigma1), ("sigma2", c.sigma2), ("sigma3", c.sigma3)] {
            if !(v.is_finite() && v >= 0.0) {
                e.push(format!("cost.{name} must be finite and >= 0"));
            }
        }
        if !c.destination.iter().all(|v| v.is_finite()) {
            e.push("cost.destination must be finite".to_string());
        }
        if !(c.variance_factor.is_finite() && c.variance_factor > 0.0) {
            e.push("cost.variance_factor must be > 0".to_string());
        }
        if let Some(v) = c.desired_variance {
            if !(v.is_finite() && v > 0.0) {
                e.push("cost.desired_variance must be > 0".to_string());
            }
        }
        if !(self.control.u_max.is_finite() && self.control.u_max > 0.0) {
            e.push("control.u_max must be finite and > 0".to_string());
        }
        let mut armijo = Vec::new();
        self.control.armijo.params().validate(&mut armijo);
        e.extend(armijo.into_iter().map(|m| format!("control.{m}")));
        if let Some(times) = &self.output.snapshot_times {
            if times.iter().any(|s| !(s.is_finite() && *s >= 0.0 && *s <= t.horizon + 1e-12)) {
                e.push("output.snapshot_times must lie in [0, time.horizon]".to_string());
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(e))
        }
    }

    pub fn slices(&self) -> usize {
        slice_count(self.time.horizon, self.time.dt).expect("validated config")
    }

    pub fn agent_positions(&self) -> Vec<Point> {
        match &self.agents.positions {
            Some(p) => p.iter().map(|q| Point::new(q[0], q[1])).collect(),
            None => agents_on_circle(self.agents.count, self.crowd.support.rect().center(), self.agents.radius),
        }
    }

    pub fn destination(&self) -> Point {
        Point::new(self.cost.destination[0], self.cost.destination[1])
    }

    /// Slice indices (0 = initial state) of the density snapshots.
    pub fn snapshot_slices(&self) -> Vec<usize> {
        let t = self.time.horizon;
        let times = match &self.output.snapshot_times {
            Some(v) => v.clone(),
            None if (t - 55.0).abs() < 1e-12 => vec![3.0, 9.0, 12.0, 20.0, 40.0, t],
            None => vec![0.0, t / 2.0, t],
        };
        let k = self.slices();
        let mut s: Vec<usize> = times.iter().map(|x| ((x / self.time.dt).round() as usize).min(k)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml("level = \"micro\"\nseed = 3\n").unwrap();
        c.validate().unwrap();
        assert_eq!(c.slices(), 500);
        assert_eq!(c.agents.count, 9);
        assert_eq!(c.agent_positions().len(), 9);
        assert_eq!((c.cost.sigma1, c.cost.sigma2), (5e-3, 5e-1));
    }

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::from_toml("level = \"micro\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("level = \"micro\"\nseed = 1\n[cost]\nsigma_1 = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("sigma_1"), "{err}");
        let err = ExperimentConfig::from_toml("level = \"micro\"\nseed = 1\nextra = 2\n").unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn validation_lists_every_violation() {
        let text = r#"
            level = "meanfield"
            seed = 1
            [time]
            dt = 0.03
            [grid]
            n = 2
            [control]
            u_max = -1.0
            [cost]
            sigma2 = -0.5
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        match c.validate().unwrap_err() {
            HarnessError::Config(msgs) => {
                let all = msgs.join("\n");
                for key in ["time", "grid.n", "control.u_max", "cost.sigma2"] {
                    assert!(all.contains(key), "missing {key} in {all}");
                }
                assert_eq!(msgs.len(), 4, "{all}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn presets_set_the_weights() {
        let s1 = ExperimentConfig::from_preset(Preset::S1, LevelKind::Micro, 1);
        assert_eq!((s1.cost.sigma1, s1.cost.sigma2, s1.cost.sigma3), (9e-2, 1e-3, 1e-7));
        let s2 = ExperimentConfig::from_preset(Preset::S2, LevelKind::Micro, 1);
        assert_eq!((s2.cost.sigma1, s2.cost.sigma2), (1e-4, 9e-1));
        let s3 = ExperimentConfig::from_preset(Preset::S3, LevelKind::Meanfield, 1);
        assert_eq!((s3.cost.sigma1, s3.cost.sigma2), (5e-3, 5e-1));
        assert_eq!((s3.time.horizon, s3.time.dt), (10.0, 0.02));
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::from_preset(Preset::S2, LevelKind::Meanfield, 9);
        c.agents.positions = Some(vec![[1.0, 2.0]; 9]);
        c.crowd.velocity = VelocityInit::Uniform { half_width: 1.5 };
        c.output.snapshot_times = Some(vec![0.0, 5.0]);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn snapshot_defaults() {
        let mut c = ExperimentConfig::from_preset(Preset::S3, LevelKind::Micro, 1);
        assert_eq!(c.snapshot_slices(), vec![0, 250, 500]);
        c.time.horizon = 55.0;
        assert_eq!(c.snapshot_slices(), vec![150, 450, 600, 1000, 2000, 2750]);
    }

    #[test]
    fn default_agents_sit_on_a_circle_around_the_support() {
        let c = ExperimentConfig::from_preset(Preset::S3, LevelKind::Micro, 1);
        let center = Point::new(22.5, 17.5);
        for p in c.agent_positions() {
            assert!(((p - center).norm() - 60.0).abs() < 1e-12);
        }
    }
}
