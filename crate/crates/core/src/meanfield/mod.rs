//! Mean-field Vlasov model on a tensor phase-space grid.

mod cfl;
mod grid;
mod interaction;
mod nonlocal;
mod step;
mod transport;
mod velocity;

pub use cfl::{cfl_check, velocity_cfl, CflReport, SCALED_CFL_LIMIT};
pub use grid::{histogram_from_particles, spatial_histogram, DensityField, PhaseGrid};
pub use interaction::{force_field, FieldKernels, ForceField};
pub use nonlocal::{nonlocal_ddog, nonlocal_df, velocity_gradient, velocity_moment};
pub use step::{adjoint_strang_step, strang_step, terminal_sensitivity, MeanFieldAdjoint, MeanFieldSolver, MfStep};
pub use transport::{advect_x, position_courant};
pub use velocity::{advect_v_half, velocity_courant};
