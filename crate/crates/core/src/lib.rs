//! Crowds of interacting particles steered by external agents, at the
//! particle level and through their mean-field Vlasov limit, with
//! adjoint-based instantaneous control.
//!
//! Everything is generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64`.

pub mod error;
pub mod icontrol;
pub mod meanfield;
pub mod microsim;
pub mod objective;
pub mod potentials;
pub mod real;
pub mod vec2;

pub use error::{ConfigError, NumericalError, SolverError};
pub use real::Real;
pub use vec2::{Sym2, Vec2};

/// Quadruple-precision scalar for reference computations.
pub type Quad = f128::f128;

pub type Point = vec2::Vec2<f64>;
pub type Ensemble = microsim::ParticleEnsemble<f64>;
pub type Model = microsim::ModelParams<f64>;
pub type Morse = potentials::MorseParams<f64>;
pub type Grid = meanfield::PhaseGrid<f64>;
pub type Density = meanfield::DensityField<f64>;
pub type Weights = objective::CostWeights<f64>;
pub type Schedule = objective::ControlSchedule<f64>;
pub type Record = icontrol::SliceRecord<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
