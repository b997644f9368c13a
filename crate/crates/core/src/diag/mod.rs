//! Measurements on states and trajectories: energy, norm families, the
//! effective viscous flux, decay fits and the density-path decomposition.

mod fit;
mod trace;

pub use fit::{fit_loglog, fit_power, zlotnik_check, DecaySeries, PowerFit, ZlotnikCase, ZlotnikOutcome};
pub use trace::{pressure_transport_field, pressure_transport_residual, trace_density_characteristic, CharTrace, GSource};

use crate::csolve::ops::{self, Edges, Padded};
use crate::csolve::slip_residual;
use crate::error::{Error, Result};
use crate::model::{mass_in_halfball, Field, FluidParams, Grid, Loc, State, Velocity, WeightSpec};
use crate::scalar::Real;

/// Flag level of [`edge_activity`].
pub const EDGE_ACTIVITY_LIMIT: f64 = 1e-6;

/// Potential energy density
/// `H(rho) = rho int_{rho_far}^{rho} (P(s) - P(rho_far)) / s^2 ds`.
pub fn potential_energy_density<T: Real>(rho: T, rho_far: T, gamma: T) -> Result<T> {
    if !(rho >= T::zero()) {
        return Err(Error::Params(format!("potential energy of negative density {rho}")));
    }
    let gm1 = gamma - T::one();
    if rho_far == T::zero() {
        return Ok(rho.powf(gamma) / gm1);
    }
    let d = rho - rho_far;
    if d.abs() <= T::lit(1e-2) * rho_far {
        return Ok(rho * near_integral(rho, rho_far, gamma));
    }
    let pf = rho_far.powf(gamma);
    let q = rho * rho_far.powf(gm1);
    let h = (rho.powf(gamma) - q) / gm1 + pf - q;
    Ok(h.max(T::zero()))
}

/// Five-point Gauss-Legendre rule on `[rho_far, rho]`, with the integrand
/// evaluated through `expm1` so that nearby densities keep full precision.
fn near_integral<T: Real>(rho: T, rho_far: T, gamma: T) -> T {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let mid = T::half() * (rho + rho_far);
    let half = T::half() * (rho - rho_far);
    let pf = rho_far.powf(gamma);
    let mut acc = T::zero();
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        let s = mid + half * T::lit(*x);
        let rel = ((s - rho_far) / rho_far).ln_1p();
        acc += T::lit(w) * pf * (gamma * rel).exp_m1() / (s * s);
    }
    acc * half
}

/// Exponent lists for the `L^p` families and the optional ball constant.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec<T> {
    /// Exponents for `||grad u||_{L^p}`.
    pub p: Vec<T>,
    /// Exponents for `||P - P(rho_far)||_{L^r}`.
    pub r: Vec<T>,
    /// `N1` of the growing half ball; `None` leaves `mass_ball` absent.
    pub n1: Option<T>,
}

impl<T: Real> Default for NormSpec<T> {
    fn default() -> Self {
        let l = |v: f64| vec![T::lit(v), T::lit(3.0), T::lit(4.0)];
        NormSpec { p: l(2.0), r: l(2.0), n1: None }
    }
}

/// One time sample of the tracked functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord<T> {
    pub t: T,
    /// `min(1, t)`.
    pub sigma_t: T,
    pub mass: T,
    pub energy: T,
    pub rho_max: T,
    pub rho_min: T,
    pub grad_u_l2: T,
    /// `(p, ||grad u||_p)`.
    pub grad_u_lp: Vec<(T, T)>,
    pub div_u_l2: T,
    /// `(r, ||P - P(rho_far)||_r)`.
    pub p_lr: Vec<(T, T)>,
    pub g_l2: T,
    pub omega_l2: T,
    pub sqrt_rho_udot_l2: Option<T>,
    pub mass_ball: Option<T>,
    pub moment_a: T,
    pub bc_res: T,
}

/// Velocity gradient: diagonal entries at cells, off-diagonal at nodes.
#[derive(Debug, Clone)]
pub struct VelocityGradient<T> {
    pub d1u1: Field<T>,
    pub d2u2: Field<T>,
    pub d2u1: Field<T>,
    pub d1u2: Field<T>,
}

impl<T: Real> VelocityGradient<T> {
    pub fn of(vel: &Velocity<T>) -> Self {
        let g = *vel.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let inv_h = T::one() / g.h();
        let pad = Padded::from_stored(vel, &Edges::zero(&g));
        let mut d1u1 = Field::zeros(g, Loc::Cell);
        let mut d2u2 = Field::zeros(g, Loc::Cell);
        for j in 0..ny {
            for i in 0..nx {
                d1u1.set(i, j, (vel.u.at(i + 1, j) - vel.u.at(i, j)) * inv_h);
                d2u2.set(i, j, (vel.v.at(i, j + 1) - vel.v.at(i, j)) * inv_h);
            }
        }
        let mut d2u1 = Field::zeros(g, Loc::Node);
        let mut d1u2 = Field::zeros(g, Loc::Node);
        for j in 0..=ny {
            for i in 0..=nx {
                let jj = j as isize;
                d2u1.set(i, j, (pad.u(i, jj) - pad.u(i, jj - 1)) * inv_h);
                let ii = i as isize;
                d1u2.set(i, j, (pad.v(ii, j) - pad.v(ii - 1, j)) * inv_h);
            }
        }
        VelocityGradient { d1u1, d2u2, d2u1, d1u2 }
    }

    /// `|grad u|` at cells, with node entries averaged over the four corners.
    pub fn magnitude(&self) -> Field<T> {
        let g = *self.d1u1.grid();
        let q = T::lit(0.25);
        let avg = |f: &Field<T>, i: usize, j: usize| q * (f.at(i, j) + f.at(i + 1, j) + f.at(i, j + 1) + f.at(i + 1, j + 1));
        let mut m = Field::zeros(g, Loc::Cell);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let (a, b) = (self.d1u1.at(i, j), self.d2u2.at(i, j));
                let (c, d) = (avg(&self.d2u1, i, j), avg(&self.d1u2, i, j));
                m.set(i, j, (a * a + b * b + c * c + d * d).sqrt());
            }
        }
        m
    }

    pub fn divergence(&self) -> Field<T> {
        let mut d = self.d1u1.clone();
        for (o, &b) in d.data_mut().iter_mut().zip(self.d2u2.data()) {
            *o += b;
        }
        d
    }

    /// `omega = d1 u2 - d2 u1` at nodes.
    pub fn vorticity(&self) -> Field<T> {
        let mut w = self.d1u2.clone();
        for (o, &b) in w.data_mut().iter_mut().zip(self.d2u1.data()) {
            *o -= b;
        }
        w
    }
}

/// Densities on the two face families; edge faces take their one neighbor.
pub fn face_densities<T: Real>(rho: &Field<T>) -> (Field<T>, Field<T>) {
    let g = *rho.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut fu = Field::zeros(g, Loc::XFace);
    for j in 0..ny {
        for i in 0..=nx {
            let v = if i == 0 {
                rho.at(0, j)
            } else if i == nx {
                rho.at(nx - 1, j)
            } else {
                T::half() * (rho.at(i - 1, j) + rho.at(i, j))
            };
            fu.set(i, j, v);
        }
    }
    let mut fv = Field::zeros(g, Loc::YFace);
    for j in 0..=ny {
        for i in 0..nx {
            let v = if j == 0 {
                rho.at(i, 0)
            } else if j == ny {
                rho.at(i, ny - 1)
            } else {
                T::half() * (rho.at(i, j - 1) + rho.at(i, j))
            };
            fv.set(i, j, v);
        }
    }
    (fu, fv)
}

fn zip_field<T: Real>(a: &Field<T>, b: &Field<T>, f: impl Fn(T, T) -> T) -> Field<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Field::from_vec(*a.grid(), a.loc(), data).expect("same layout")
}

/// `int (rho |u|^2 / 2 + H(rho))`.
pub fn energy<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Result<T> {
    let (fu, fv) = face_densities(&state.rho);
    let ku = zip_field(&fu, &state.vel.u, |r, u| r * u * u).integral();
    let kv = zip_field(&fv, &state.vel.v, |r, v| r * v * v).integral();
    let mut hd = Vec::with_capacity(state.rho.data().len());
    for &r in state.rho.data() {
        hd.push(potential_energy_density(r, params.rho_far(), params.gamma())?);
    }
    let hf = Field::from_vec(*state.grid(), Loc::Cell, hd)?;
    Ok(T::half() * (ku + kv) + hf.integral())
}

/// `G = nu div u - (P - P(rho_far))` at cells.
pub fn effective_flux<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Field<T> {
    let div = VelocityGradient::of(&state.vel).divergence();
    let (nu, gamma, pf) = (params.nu(), params.gamma(), params.p_far());
    zip_field(&div, &state.rho, |d, r| nu * d - (r.powf(gamma) - pf))
}

/// `u_dot = (u - u_prev)/dt + u . grad u` on every face. Edge faces carry
/// only the time difference; on the wall both parts vanish.
pub fn material_derivative<T: Real>(state: &State<T>, prev: &State<T>) -> Result<(Field<T>, Field<T>)> {
    check_pair(prev, state)?;
    let g = *state.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_dt = T::one() / (state.t - prev.t);
    let pad = Padded::from_stored(&state.vel, &Edges::zero(&g));
    let (cu, cv) = ops::convection(&pad, g.h());
    let mut du = zip_field(&state.vel.u, &prev.vel.u, |a, b| (a - b) * inv_dt);
    let mut dv = zip_field(&state.vel.v, &prev.vel.v, |a, b| (a - b) * inv_dt);
    for j in 0..ny {
        for i in 1..nx {
            let k = j * (nx - 1) + i - 1;
            du.set(i, j, du.at(i, j) + cu[k]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            dv.set(i, j, dv.at(i, j) + cv[(j - 1) * nx + i]);
        }
    }
    for i in 0..nx {
        dv.set(i, 0, T::zero());
    }
    Ok((du, dv))
}

fn check_pair<T: Real>(prev: &State<T>, next: &State<T>) -> Result<()> {
    if prev.grid() != next.grid() {
        return Err(Error::Incompatible("states live on different grids".into()));
    }
    if !(next.t > prev.t) {
        return Err(Error::State(format!("states are not consecutive: t = {} then {}", prev.t, next.t)));
    }
    Ok(())
}

/// `int rho xbar^a`.
pub fn weighted_moment<T: Real>(state: &State<T>, wspec: &WeightSpec<T>) -> T {
    let g = *state.grid();
    let a = wspec.a();
    let w = Field::from_fn(g, Loc::Cell, |x, y| WeightSpec::xbar(x, y).powf(a));
    zip_field(&state.rho, &w, |r, w| r * w).integral()
}

/// Density mass in the half ball of the given radius about the origin.
pub fn mass_ball<T: Real>(state: &State<T>, radius: T) -> T {
    mass_in_halfball(&state.rho, radius)
}

/// Slip residual of the velocity along the wall.
pub fn bc_residual<T: Real>(state: &State<T>, params: &FluidParams<T>) -> T {
    slip_residual(&state.vel, params.cap_a())
}

/// `max |grad u|` over the cells within `band` of the far edges divided by
/// its maximum over the remaining cells. Zero for a gradient-free interior.
pub fn edge_activity<T: Real>(state: &State<T>, band: usize) -> T {
    let m = VelocityGradient::of(&state.vel).magnitude();
    band_ratio(&m, band)
}

/// [`edge_activity`] of `rho |grad u|`. In vacuum the velocity solves an
/// elliptic problem and is nonzero up to the far edges at once, so only the
/// density-weighted activity tracks the gas reaching the truncation.
pub fn weighted_edge_activity<T: Real>(state: &State<T>, band: usize) -> T {
    let m = VelocityGradient::of(&state.vel).magnitude();
    band_ratio(&zip_field(&m, &state.rho, |a, r| a * r), band)
}

fn band_ratio<T: Real>(m: &Field<T>, band: usize) -> T {
    let g = *m.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (mut edge, mut inner) = (T::zero(), T::zero());
    for j in 0..ny {
        for i in 0..nx {
            let v = m.at(i, j);
            if i < band || i + band >= nx || j + band >= ny {
                edge = edge.max(v);
            } else {
                inner = inner.max(v);
            }
        }
    }
    if inner > T::zero() {
        edge / inner
    } else {
        T::zero()
    }
}

/// Every functional of the record at one sample.
pub fn sample<T: Real>(
    state: &State<T>,
    prev: Option<&State<T>>,
    params: &FluidParams<T>,
    wspec: &WeightSpec<T>,
    norms: &NormSpec<T>,
) -> Result<DiagRecord<T>> {
    let g: Grid<T> = *state.grid();
    if state.vel.grid() != &g {
        return Err(Error::Incompatible("density and velocity grids differ".into()));
    }
    let grad = VelocityGradient::of(&state.vel);
    let mag = grad.magnitude();
    let div = grad.divergence();
    let pf = params.p_far();
    let gamma = params.gamma();
    let dp = state.rho.map(|r| r.powf(gamma) - pf);
    let gflux = zip_field(&div, &dp, |d, q| params.nu() * d - q);
    let udot = match prev {
        Some(p) => {
            let (du, dv) = material_derivative(state, p)?;
            let (fu, fv) = face_densities(&state.rho);
            let su = zip_field(&fu, &du, |r, a| r * a * a).integral();
            let sv = zip_field(&fv, &dv, |r, a| r * a * a).integral();
            Some((su + sv).sqrt())
        }
        None => None,
    };
    Ok(DiagRecord {
        t: state.t,
        sigma_t: state.t.min(T::one()),
        mass: state.rho.integral(),
        energy: energy(state, params)?,
        rho_max: state.rho.max(),
        rho_min: state.rho.min(),
        grad_u_l2: mag.l2_norm(),
        grad_u_lp: norms.p.iter().map(|&p| (p, mag.lp_norm(p))).collect(),
        div_u_l2: div.l2_norm(),
        p_lr: norms.r.iter().map(|&r| (r, dp.lp_norm(r))).collect(),
        g_l2: gflux.l2_norm(),
        omega_l2: grad.vorticity().l2_norm(),
        sqrt_rho_udot_l2: udot,
        mass_ball: norms.n1.map(|n1| mass_in_halfball(&state.rho, n1 * (T::one() + state.t))),
        moment_a: weighted_moment(state, wspec),
        bc_res: bc_residual(state, params),
    })
}

#[cfg(test)]
mod tests;
