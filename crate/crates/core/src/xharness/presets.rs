//! Initial-condition presets. With `s = ((x - cx)^2 + (y - cy)^2) / w^2`,
//! amplitude `a` and velocity scale `U`:
//!
//! * `gauss_bump`: `rho = rho_far + a e^(-s)`, `u = 0`.
//! * `perturbed_constant`: `rho = rho_far + a (1 - s) e^(-s)` minus a
//!   multiple of `e^(-s)` that makes the discrete perturbation mass zero;
//!   `u = 0`.
//! * `shear_divfree`: density as `gauss_bump`; `u = (-d2 psi, d1 psi)` with
//!   the stream function `psi = U y e^(-((x - cx)^2 + y^2) / w^2)` sampled at
//!   the nodes, so the discrete divergence vanishes (up to the far-edge
//!   truncation) and `u2 = 0` on the wall.
//! * `compressive`: density as `gauss_bump`; `u = U w sqrt(e/2) grad phi`
//!   with `phi = e^(-((x - cx)^2 + y^2) / w^2)`, a converging flow of peak
//!   speed `U`.
//!
//! In vacuum (`rho_far = 0`) the density is rescaled to unit mass.

use crate::error::{Error, Result};
use crate::model::{init_state, make_params, Field, Loc, VacuumProfile};
use crate::{FluidParams, Grid, State};

use super::config::{IcSpec, Preset};

pub fn build(ic: &IcSpec, grid: Grid, params: &FluidParams) -> Result<(State, Option<VacuumProfile<f64>>)> {
    let (cx, cy, w, a, big_u) = (ic.center_x, ic.center_y, ic.width, ic.amplitude, ic.velocity);
    let rf = params.rho_far();
    let s = move |x: f64, y: f64| ((x - cx).powi(2) + (y - cy).powi(2)) / (w * w);
    let bump = move |x: f64, y: f64| rf + a * (-s(x, y)).exp();
    let h = grid.h();
    let psi = move |x: f64, y: f64| big_u * y * (-((x - cx).powi(2) + y * y) / (w * w)).exp();
    let scale = big_u * w * (std::f64::consts::E / 2.0).sqrt();
    let phi_grad = move |x: f64, y: f64| {
        let e = (-((x - cx).powi(2) + y * y) / (w * w)).exp();
        let k = -2.0 * scale * e / (w * w);
        (k * (x - cx), k * y)
    };
    let vacuum = params.is_vacuum();
    match ic.preset {
        Preset::GaussBump => init_state(grid, bump, |_, _| (0.0, 0.0), params, vacuum),
        Preset::PerturbedConstant => {
            if vacuum {
                return Err(Error::Params("perturbed_constant needs rho_far > 0".into()));
            }
            let q = Field::from_fn(grid, Loc::Cell, |x, y| a * (1.0 - s(x, y)) * (-s(x, y)).exp());
            let e = Field::from_fn(grid, Loc::Cell, |x, y| (-s(x, y)).exp());
            let c = q.integral() / e.integral();
            let rho = move |x: f64, y: f64| rf + a * (1.0 - s(x, y)) * (-s(x, y)).exp() - c * (-s(x, y)).exp();
            init_state(grid, rho, |_, _| (0.0, 0.0), params, false)
        }
        Preset::ShearDivfree => {
            let u = move |x: f64, y: f64| {
                let u1 = -(psi(x, y + h / 2.0) - psi(x, y - h / 2.0)) / h;
                let u2 = if y == 0.0 { 0.0 } else { (psi(x + h / 2.0, y) - psi(x - h / 2.0, y)) / h };
                (u1, u2)
            };
            init_state(grid, bump, u, params, vacuum)
        }
        Preset::Compressive => {
            let u = move |x: f64, y: f64| {
                let (u1, u2) = phi_grad(x, y);
                (u1, if y == 0.0 { 0.0 } else { u2 })
            };
            init_state(grid, bump, u, params, vacuum)
        }
    }
}

/// Convenience for tests and sweeps: the params of a sweep member.
pub fn with_nu(params: &FluidParams, nu: f64) -> Result<FluidParams> {
    make_params(params.mu(), nu - 2.0 * params.mu(), params.gamma(), params.cap_a(), params.rho_far())
}
