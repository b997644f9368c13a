//! Domain types: parameters, grid, staggered fields and states.

pub mod ball;
pub mod grid;
pub mod params;
pub mod state;

pub use ball::{mass_in_halfball, smallest_radius_with_mass};
pub use grid::{make_grid, Field, Grid, Loc, MIN_CELLS};
pub use params::{make_params, FluidParams};
pub use state::{init_state, pressure, State, VacuumProfile, Velocity, WeightSpec};
