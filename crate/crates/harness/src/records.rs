//! Per-slice rows of the run outputs. Column names carry their units.

use serde::{Deserialize, Serialize};

pub const COST_HEADER: [&str; 10] = [
    "slice",
    "t_end [time]",
    "J [cost]",
    "J1 [cost]",
    "J2 [cost]",
    "J3 [cost]",
    "armijo_step [time^2/length^2]",
    "halvings [count]",
    "gradient_norm [cost*time/length]",
    "exhausted [bool]",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub slice: usize,
    #[serde(rename = "t_end [time]")]
    pub time: f64,
    #[serde(rename = "J [cost]")]
    pub total: f64,
    #[serde(rename = "J1 [cost]")]
    pub variance: f64,
    #[serde(rename = "J2 [cost]")]
    pub destination: f64,
    #[serde(rename = "J3 [cost]")]
    pub control: f64,
    #[serde(rename = "armijo_step [time^2/length^2]")]
    pub step: f64,
    #[serde(rename = "halvings [count]")]
    pub halvings: u32,
    #[serde(rename = "gradient_norm [cost*time/length]")]
    pub gradient_norm: f64,
    #[serde(rename = "exhausted [bool]")]
    pub exhausted: bool,
}

pub const CONTROL_HEADER: [&str; 6] =
    ["slice", "t_start [time]", "agent", "ux [length/time]", "uy [length/time]", "speed [length/time]"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRow {
    pub slice: usize,
    #[serde(rename = "t_start [time]")]
    pub time: f64,
    pub agent: usize,
    #[serde(rename = "ux [length/time]")]
    pub ux: f64,
    #[serde(rename = "uy [length/time]")]
    pub uy: f64,
    #[serde(rename = "speed [length/time]")]
    pub speed: f64,
}

pub const MOMENT_HEADER: [&str; 6] =
    ["slice", "t [time]", "Ex [length]", "Ey [length]", "V [length^2]", "mass [1]"];

/// Moments after `slice` slices (row 0 is the initial state).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub slice: usize,
    #[serde(rename = "t [time]")]
    pub time: f64,
    #[serde(rename = "Ex [length]")]
    pub ex: f64,
    #[serde(rename = "Ey [length]")]
    pub ey: f64,
    #[serde(rename = "V [length^2]")]
    pub variance: f64,
    #[serde(rename = "mass [1]")]
    pub mass: f64,
}

pub const AGENT_HEADER: [&str; 5] = ["slice", "t [time]", "agent", "x [length]", "y [length]"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub slice: usize,
    #[serde(rename = "t [time]")]
    pub time: f64,
    pub agent: usize,
    #[serde(rename = "x [length]")]
    pub x: f64,
    #[serde(rename = "y [length]")]
    pub y: f64,
}

pub const COSTS_FILE: &str = "costs.csv";
pub const CONTROLS_FILE: &str = "controls.csv";
pub const MOMENTS_FILE: &str = "moments.csv";
pub const AGENTS_FILE: &str = "agents.csv";
pub const RHO_SERIES_FILE: &str = "rho_series.bin";
pub const SNAPSHOTS_FILE: &str = "snapshots.bin";
pub const PHASE_SNAPSHOTS_FILE: &str = "phase_snapshots.bin";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
