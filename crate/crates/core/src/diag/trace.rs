use super::{check_pair, effective_flux, face_densities, material_derivative, VelocityGradient};
use crate::error::{Error, Result};
use crate::model::{Field, FluidParams, Grid, Loc, State};
use crate::reflect::solve_g_neumann;
use crate::scalar::Real;

/// Where `G` along the path comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GSource {
    /// `nu div u - (P - P(rho_far))`.
    Definition,
    /// Neumann reconstruction from `rho u_dot`, shifted to vanish on average
    /// along the far edges.
    Neumann,
}

/// Residual of `d rho/dt = g(rho) + h'` along one particle path.
#[derive(Debug, Clone, PartialEq)]
pub struct CharTrace<T> {
    /// Sample times of `residual`.
    pub times: Vec<T>,
    pub residual: Vec<T>,
    /// Particle position at every state visited.
    pub path: Vec<(T, T)>,
    /// Set when the particle left the box and the series was cut short.
    pub exited: bool,
}

impl<T: Real> CharTrace<T> {
    pub fn max_abs(&self) -> T {
        self.residual.iter().fold(T::zero(), |m, r| m.max(r.abs()))
    }
}

/// Regular lattice of samples with clamped bilinear interpolation.
struct Lattice<'a, T> {
    x0: T,
    y0: T,
    inv_h: T,
    ni: usize,
    nj: usize,
    data: &'a [T],
}

impl<'a, T: Real> Lattice<'a, T> {
    fn of(f: &'a Field<T>) -> Self {
        let g = f.grid();
        let (x0, y0) = g.position(f.loc(), 0, 0);
        Lattice { x0, y0, inv_h: T::one() / g.h(), ni: f.ni(), nj: f.nj(), data: f.data() }
    }

    fn axis(c: T, n: usize) -> (usize, T) {
        let top = T::from_count(n - 1);
        let c = c.max(T::zero()).min(top);
        let k = c.floor().to_usize().unwrap_or(0).min(n.saturating_sub(2));
        (k, c - T::from_count(k))
    }

    fn at(&self, x: T, y: T) -> T {
        let (i, fx) = Self::axis((x - self.x0) * self.inv_h, self.ni);
        let (j, fy) = Self::axis((y - self.y0) * self.inv_h, self.nj);
        let s = |i: usize, j: usize| self.data[j * self.ni + i];
        let (i1, j1) = ((i + 1).min(self.ni - 1), (j + 1).min(self.nj - 1));
        let one = T::one();
        (one - fy) * ((one - fx) * s(i, j) + fx * s(i1, j)) + fy * ((one - fx) * s(i, j1) + fx * s(i1, j1))
    }
}

/// First velocity component with the wall ghost row prepended, so that
/// interpolation below the first row sees the slip condition.
fn u_with_ghost<T: Real>(s: &State<T>) -> (Vec<T>, usize) {
    let g = s.grid();
    let w = g.nx() + 1;
    let mut d = Vec::with_capacity(w * (g.ny() + 1));
    d.extend_from_slice(&s.vel.wall_ghost);
    d.extend_from_slice(s.vel.u.data());
    (d, g.ny() + 1)
}

fn velocity_at<T: Real>(s: &State<T>, ug: &[T], nj: usize, x: T, y: T) -> (T, T) {
    let g = s.grid();
    let lu = Lattice { x0: -g.lx(), y0: -T::half() * g.h(), inv_h: T::one() / g.h(), ni: g.nx() + 1, nj, data: ug };
    (lu.at(x, y), Lattice::of(&s.vel.v).at(x, y))
}

fn inside<T: Real>(g: &Grid<T>, p: (T, T)) -> bool {
    p.0 > -g.lx() && p.0 < g.lx() && p.1 >= T::zero() && p.1 < g.ly()
}

pub(super) fn neumann_flux<T: Real>(s: &State<T>, prev: &State<T>) -> Result<Field<T>> {
    let (du, dv) = material_derivative(s, prev)?;
    let (fu, fv) = face_densities(&s.rho);
    let mul = |a: &Field<T>, b: &Field<T>| {
        let d = a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect();
        Field::from_vec(*a.grid(), a.loc(), d)
    };
    let mut gf = solve_g_neumann(&mul(&fu, &du)?, &mul(&fv, &dv)?, s.grid())?;
    let g = *s.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut ring = Vec::new();
    for j in 0..ny {
        ring.push(gf.at(0, j));
        ring.push(gf.at(nx - 1, j));
    }
    ring.extend((1..nx - 1).map(|i| gf.at(i, ny - 1)));
    let shift = ring.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_count(ring.len());
    for v in gf.data_mut() {
        *v -= shift;
    }
    Ok(gf)
}

/// Follows the particle from `x0` through the trajectory with a two-stage
/// Runge-Kutta step on bilinearly interpolated velocities, and returns
/// `r = d rho/dt - g(rho) - h'` at the start of every step, where
/// `d rho/dt` is the forward difference of `rho` along the path,
/// `g(rho) = -rho (P(rho) - P(rho_far)) / nu` and `h' = -rho G / nu`.
/// The Neumann source needs a previous state, so its series starts one
/// step later.
pub fn trace_density_characteristic<T: Real>(
    trajectory: &[State<T>],
    x0: (T, T),
    params: &FluidParams<T>,
    source: GSource,
) -> Result<CharTrace<T>> {
    if trajectory.len() < 3 {
        return Err(Error::Series(format!("need at least 3 states, got {}", trajectory.len())));
    }
    for w in trajectory.windows(2) {
        check_pair(&w[0], &w[1])?;
    }
    let g = *trajectory[0].grid();
    if !inside(&g, x0) {
        return Err(Error::Params(format!("start point ({}, {}) outside the domain", x0.0, x0.1)));
    }
    let ghosts: Vec<(Vec<T>, usize)> = trajectory.iter().map(u_with_ghost).collect();
    let vel = |n: usize, p: (T, T)| velocity_at(&trajectory[n], &ghosts[n].0, ghosts[n].1, p.0, p.1);
    let mut path = vec![x0];
    let mut exited = false;
    for n in 0..trajectory.len() - 1 {
        let dt = trajectory[n + 1].t - trajectory[n].t;
        let x = path[n];
        let k1 = vel(n, x);
        let xp = (x.0 + dt * k1.0, x.1 + dt * k1.1);
        let k2 = vel(n + 1, xp);
        let next = (x.0 + T::half() * dt * (k1.0 + k2.0), x.1 + T::half() * dt * (k1.1 + k2.1));
        if !inside(&g, next) {
            exited = true;
            break;
        }
        path.push(next);
    }
    let (nu, gamma, pf) = (params.nu(), params.gamma(), params.p_far());
    let rho_at = |n: usize| Lattice::of(&trajectory[n].rho).at(path[n].0, path[n].1);
    let mut times = Vec::new();
    let mut residual = Vec::new();
    let first = if source == GSource::Neumann { 1 } else { 0 };
    for n in first..path.len().saturating_sub(1) {
        let s = &trajectory[n];
        let gfield = match source {
            GSource::Definition => effective_flux(s, params),
            GSource::Neumann => neumann_flux(s, &trajectory[n - 1])?,
        };
        let r = rho_at(n);
        let drho = (rho_at(n + 1) - r) / (trajectory[n + 1].t - s.t);
        let gval = -r * (r.powf(gamma) - pf) / nu;
        let hval = -r * Lattice::of(&gfield).at(path[n].0, path[n].1) / nu;
        times.push(s.t);
        residual.push(drho - gval - hval);
    }
    Ok(CharTrace { times, residual, path, exited })
}

/// `max |(P' - P)/dt + u . grad P + gamma P div u|` over the cells, with all
/// spatial terms at the earlier state. Written for `q = P - P(rho_far)` this
/// is `q_t + u . grad q + gamma q div u + gamma P(rho_far) div u`, the same
/// expression.
pub fn pressure_transport_residual<T: Real>(prev: &State<T>, next: &State<T>, params: &FluidParams<T>) -> Result<T> {
    Ok(pressure_transport_field(prev, next, params)?.max_abs())
}

/// Cellwise residual behind [`pressure_transport_residual`].
pub fn pressure_transport_field<T: Real>(prev: &State<T>, next: &State<T>, params: &FluidParams<T>) -> Result<Field<T>> {
    check_pair(prev, next)?;
    let g = *prev.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let gamma = params.gamma();
    let pf = params.p_far();
    let inv_dt = T::one() / (next.t - prev.t);
    let c = T::one() / (T::two() * g.h());
    let p0 = prev.rho.map(|r| r.powf(gamma));
    let p1 = next.rho.map(|r| r.powf(gamma));
    let div = VelocityGradient::of(&prev.vel).divergence();
    let pat = |i: isize, j: isize| -> T {
        if i < 0 || i >= nx as isize || j >= ny as isize {
            pf
        } else if j < 0 {
            p0.at(i as usize, (-1 - j) as usize)
        } else {
            p0.at(i as usize, j as usize)
        }
    };
    let mut out = Field::zeros(g, Loc::Cell);
    for j in 0..ny {
        for i in 0..nx {
            let (ii, jj) = (i as isize, j as isize);
            let u1 = T::half() * (prev.vel.u.at(i, j) + prev.vel.u.at(i + 1, j));
            let u2 = T::half() * (prev.vel.v.at(i, j) + prev.vel.v.at(i, j + 1));
            let dx = (pat(ii + 1, jj) - pat(ii - 1, jj)) * c;
            let dy = (pat(ii, jj + 1) - pat(ii, jj - 1)) * c;
            let r = (p1.at(i, j) - p0.at(i, j)) * inv_dt + u1 * dx + u2 * dy + gamma * p0.at(i, j) * div.at(i, j);
            out.set(i, j, r);
        }
    }
    Ok(out)
}
