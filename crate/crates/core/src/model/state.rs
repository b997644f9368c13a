use super::ball::smallest_radius_with_mass;
use super::grid::{Field, Grid, Loc};
use super::params::FluidParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// MAC velocity: first component on vertical faces, second on horizontal
/// faces, plus the ghost row of the first component just below the wall
/// (`y = -h/2`) that carries the slip condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity<T> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub wall_ghost: Vec<T>,
}

impl<T: Real> Velocity<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Velocity {
            u: Field::zeros(grid, Loc::XFace),
            v: Field::zeros(grid, Loc::YFace),
            wall_ghost: vec![T::zero(); grid.nx() + 1],
        }
    }

    /// Samples a velocity function on the faces; the ghost row is sampled at
    /// `y = -h/2`.
    pub fn sample<F: Fn(T, T) -> (T, T)>(grid: Grid<T>, f: F) -> Self {
        let u = Field::from_fn(grid, Loc::XFace, |x, y| f(x, y).0);
        let v = Field::from_fn(grid, Loc::YFace, |x, y| f(x, y).1);
        let wall_ghost = (0..=grid.nx()).map(|i| f(grid.xf(i), -T::half() * grid.h()).0).collect();
        Velocity { u, v, wall_ghost }
    }

    pub fn grid(&self) -> &Grid<T> {
        self.u.grid()
    }

    pub fn max_speed(&self) -> T {
        self.u.max_abs().max(self.v.max_abs())
    }

    pub fn all_finite(&self) -> bool {
        self.u.all_finite() && self.v.all_finite() && self.wall_ghost.iter().all(|v| v.is_finite())
    }
}

/// Snapshot `(rho, u, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub rho: Field<T>,
    pub vel: Velocity<T>,
    pub t: T,
}

impl<T: Real> State<T> {
    pub fn grid(&self) -> &Grid<T> {
        self.rho.grid()
    }

    pub fn mass(&self) -> T {
        self.rho.integral()
    }

    /// Checks the structural invariants: layouts, finiteness, `rho >= 0`.
    pub fn validate(&self) -> Result<()> {
        let g = *self.rho.grid();
        if self.rho.loc() != Loc::Cell
            || self.vel.u.loc() != Loc::XFace
            || self.vel.v.loc() != Loc::YFace
            || *self.vel.u.grid() != g
            || *self.vel.v.grid() != g
            || self.vel.wall_ghost.len() != g.nx() + 1
        {
            return Err(Error::State("field layouts do not match the grid".into()));
        }
        if !self.rho.all_finite() || !self.vel.all_finite() || !self.t.is_finite() {
            return Err(Error::NonFinite(format!("state at t = {}", self.t)));
        }
        if self.rho.min() < T::zero() {
            return Err(Error::State(format!("negative density {}", self.rho.min())));
        }
        Ok(())
    }
}

/// Concentration data of a vacuum-far-field initial density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumProfile<T> {
    /// Smallest radius whose half ball holds half the mass.
    pub n0: T,
    pub total_mass: T,
}

/// Moment exponent of the spatial weight `xbar^a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec<T> {
    a: T,
}

impl<T: Real> WeightSpec<T> {
    pub fn new(a: T) -> Result<Self> {
        if !(a > T::one()) {
            return Err(Error::Params(format!("moment exponent must satisfy a > 1 (a = {a})")));
        }
        Ok(WeightSpec { a })
    }
    pub fn a(&self) -> T {
        self.a
    }
    /// `xbar = (e + |x|^2)^(1/2) log^2(e + |x|^2)`.
    pub fn xbar(x: T, y: T) -> T {
        let s = T::lit(std::f64::consts::E) + x * x + y * y;
        let l = s.ln();
        s.sqrt() * l * l
    }
}

/// Samples the initial data.
///
/// In vacuum mode the returned profile holds `N0`, and with
/// `normalize_mass` the density is first rescaled to unit discrete mass.
pub fn init_state<T, R, U>(
    grid: Grid<T>,
    rho0: R,
    u0: U,
    params: &FluidParams<T>,
    normalize_mass: bool,
) -> Result<(State<T>, Option<VacuumProfile<T>>)>
where
    T: Real,
    R: Fn(T, T) -> T,
    U: Fn(T, T) -> (T, T),
{
    let mut rho = Field::from_fn(grid, Loc::Cell, &rho0);
    if !rho.all_finite() {
        return Err(Error::NonFinite("initial density".into()));
    }
    if rho.min() < T::zero() {
        return Err(Error::State(format!("negative initial density sample {}", rho.min())));
    }
    let mut vel = Velocity::sample(grid, &u0);
    if !vel.all_finite() {
        return Err(Error::NonFinite("initial velocity".into()));
    }
    let scale = T::one() + vel.max_speed();
    let wall_trace = vel.v.row(0).iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if wall_trace > T::lit(1e-12) * scale {
        return Err(Error::State(format!(
            "initial velocity violates u.n = 0 on the wall (max |u2| = {wall_trace})"
        )));
    }
    crate::csolve::apply_slip_bc(&mut vel, params.cap_a());

    let mut profile = None;
    if params.is_vacuum() {
        let mut mass = rho.integral();
        if !(mass > T::zero()) {
            return Err(Error::State("vacuum mode with zero total mass".into()));
        }
        if normalize_mass {
            let s = T::one() / mass;
            rho = rho.map(|v| v * s);
            mass = rho.integral();
        }
        let n0 = smallest_radius_with_mass(&rho, T::half() * mass)
            .ok_or_else(|| Error::State("cannot locate half-mass radius".into()))?;
        profile = Some(VacuumProfile { n0, total_mass: mass });
    }
    Ok((State { rho, vel, t: T::zero() }, profile))
}

/// Barotropic pressure `P = rho^gamma` at cell centers.
pub fn pressure<T: Real>(rho: &Field<T>, gamma: T) -> Result<Field<T>> {
    if rho.min() < T::zero() {
        return Err(Error::State(format!("negative density {} in pressure", rho.min())));
    }
    Ok(rho.map(|r| r.powf(gamma)))
}
