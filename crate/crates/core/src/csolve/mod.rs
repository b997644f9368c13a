//! Semi-implicit stepper for the compressible system.
//!
//! Density is advanced explicitly with limited upwind fluxes, convection and
//! pressure are explicit, and the full viscous operator is implicit so the
//! step size is limited by the sound speed only, never by the viscosity.

pub mod ops;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::krylov::{pcg, Stop};
use crate::model::{FluidParams, Grid, State, Velocity};
use crate::scalar::Real;
use crate::sum::pairwise_sum;
use ops::{Edges, Padded, VecFn, ViscousOp, ViscousPrecond};

pub use ops::robin_ratio;

#[derive(Clone)]
pub struct StepperConfig<T> {
    pub cfl: T,
    pub visc_tol: T,
    pub visc_maxit: usize,
    /// Lower bound on the density coefficient of the implicit operator.
    pub rho_floor: T,
    /// Body force `f(x, y, t)` per unit mass.
    pub forcing: Option<VecFn<T>>,
    /// Velocity on the far-field edges; zero when absent.
    pub edge_velocity: Option<VecFn<T>>,
    pub wall_budget: Option<Duration>,
}

impl<T: Real> Default for StepperConfig<T> {
    fn default() -> Self {
        StepperConfig {
            cfl: T::lit(0.4),
            visc_tol: T::lit(1e-10),
            visc_maxit: 500,
            rho_floor: T::lit(1e-10),
            forcing: None,
            edge_velocity: None,
            wall_budget: None,
        }
    }
}

impl<T: Real> std::fmt::Debug for StepperConfig<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepperConfig")
            .field("cfl", &self.cfl)
            .field("visc_tol", &self.visc_tol)
            .field("visc_maxit", &self.visc_maxit)
            .field("rho_floor", &self.rho_floor)
            .field("forcing", &self.forcing.is_some())
            .field("edge_velocity", &self.edge_velocity.is_some())
            .field("wall_budget", &self.wall_budget)
            .finish()
    }
}

impl<T: Real> StepperConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(Error::Params(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.visc_tol > T::zero() && self.visc_tol <= T::lit(1e-8)) {
            return Err(Error::Params(format!("visc_tol must lie in (0, 1e-8], got {}", self.visc_tol)));
        }
        if self.visc_maxit == 0 {
            return Err(Error::Params("visc_maxit must be positive".into()));
        }
        if !(self.rho_floor > T::zero()) {
            return Err(Error::Params("rho_floor must be positive".into()));
        }
        Ok(())
    }

    fn edges(&self, g: &Grid<T>, t: T) -> Edges<T> {
        match &self.edge_velocity {
            Some(f) => Edges::sample(g, f, t),
            None => Edges::zero(g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<T> {
    pub dt_used: T,
    pub visc_iters: usize,
    pub max_div: T,
    pub bc_residual: T,
}

/// `dt = cfl h / (max |u| + max c)` with `c = sqrt(gamma rho^(gamma-1))`.
pub fn cfl_dt<T: Real>(state: &State<T>, params: &FluidParams<T>, grid: &Grid<T>, cfg: &StepperConfig<T>) -> Result<T> {
    if !state.rho.all_finite() || !state.vel.all_finite() {
        return Err(Error::NonFinite(format!("state at t = {}", state.t)));
    }
    let gamma = params.gamma();
    let rmax = state.rho.max();
    let cmax = if rmax > T::zero() { (gamma * rmax.powf(gamma - T::one())).sqrt() } else { T::zero() };
    let speed = state.vel.max_speed() + cmax;
    if rmax <= T::zero() || !(speed > T::zero()) {
        return Err(Error::Degenerate("no wave speed".into()));
    }
    Ok(cfg.cfl * grid.h() / speed)
}

/// Imposes `u2 = 0` on the wall, fills the ghost row so that the centered
/// wall derivative satisfies `d2 u1 = A u1`, and zeroes the far-field edges.
pub fn apply_slip_bc<T: Real>(vel: &mut Velocity<T>, cap_a: T) {
    let edges = Edges::zero(vel.grid());
    ops::fill_boundary(vel, &edges, cap_a);
}

/// `max_i max(|u2(x_i, 0)|, |d2 u1 - A u1|)` along the wall, using the ghost
/// row for the one-sided derivative.
pub fn slip_residual<T: Real>(vel: &Velocity<T>, cap_a: T) -> T {
    let g = vel.grid();
    let h = g.h();
    let mut r = vel.v.row(0).iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    for i in 0..=g.nx() {
        let (u0, ug) = (vel.u.at(i, 0), vel.wall_ghost[i]);
        let robin = (u0 - ug) / h - cap_a * T::half() * (u0 + ug);
        r = r.max(robin.abs());
    }
    r
}

fn first_bad<T: Real>(name: &str, data: &[T], ni: usize, t: T) -> Error {
    let k = data.iter().position(|v| !v.is_finite()).unwrap_or(0);
    Error::NonFinite(format!("{name} at sample ({}, {}) during step from t = {t}", k % ni.max(1), k / ni.max(1)))
}

/// One step of size `dt` from `state`.
pub fn step<T: Real>(state: &State<T>, params: &FluidParams<T>, cfg: &StepperConfig<T>, dt: T) -> Result<(State<T>, StepReport<T>)> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Params(format!("step size must be positive and finite, got {dt}")));
    }
    let g = *state.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let t0 = state.t;
    let t1 = t0 + dt;
    let cap_a = params.cap_a();

    let edges0 = cfg.edges(&g, t0);
    let pad0 = if cfg.edge_velocity.is_some() {
        let mut v = state.vel.clone();
        ops::fill_boundary(&mut v, &edges0, cap_a);
        Padded::from_velocity(&v, &edges0, cap_a)
    } else {
        Padded::from_velocity(&state.vel, &edges0, cap_a)
    };

    let rho1 = ops::continuity(&state.rho, &pad0, params.rho_far(), dt);
    if !rho1.all_finite() {
        return Err(first_bad("density", rho1.data(), nx, t0));
    }
    if rho1.min() < T::zero() {
        let k = rho1.data().iter().position(|&r| r < T::zero()).unwrap_or(0);
        return Err(Error::State(format!(
            "negative density {} at cell ({}, {}) during step from t = {t0}",
            rho1.min(),
            k % nx,
            k / nx
        )));
    }

    let (ru, rv) = ops::face_density(&rho1, cfg.rho_floor);
    let p1: Vec<T> = rho1.data().iter().map(|&r| params.pressure_of(r)).collect();
    let (gpu, gpv) = ops::cell_gradient(&p1, &g);
    let (cu, cv) = ops::convection(&pad0, h);
    let (xu0, xv0) = ops::gather_interior(&state.vel);

    let mut bu: Vec<T> = (0..xu0.len()).map(|k| ru[k] * (xu0[k] - dt * cu[k]) - dt * gpu[k]).collect();
    let mut bv: Vec<T> = (0..xv0.len()).map(|k| rv[k] * (xv0[k] - dt * cv[k]) - dt * gpv[k]).collect();
    if let Some(f) = &cfg.forcing {
        for j in 0..ny {
            for i in 1..nx {
                let k = j * (nx - 1) + i - 1;
                bu[k] += dt * ru[k] * f(g.xf(i), g.yc(j), t1).0;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let k = (j - 1) * nx + i;
                bv[k] += dt * rv[k] * f(g.xc(i), g.yf(j), t1).1;
            }
        }
    }

    let op = ViscousOp { rho_u: &ru, rho_v: &rv, dt, mu: params.mu(), gd: params.mu() + params.lambda(), h };
    let edges1 = cfg.edges(&g, t1);
    if cfg.edge_velocity.is_some() {
        let mut vb = Velocity::zeros(g);
        ops::fill_boundary(&mut vb, &edges1, cap_a);
        let pb = Padded::from_velocity(&vb, &edges1, cap_a);
        let mut au = vec![T::zero(); bu.len()];
        let mut av = vec![T::zero(); bv.len()];
        op.apply_padded(&pb, &mut au, &mut av);
        bu.iter_mut().zip(&au).for_each(|(b, a)| *b -= *a);
        bv.iter_mut().zip(&av).for_each(|(b, a)| *b -= *a);
    }

    let nu_ = bu.len();
    let mut b = bu;
    b.extend_from_slice(&bv);
    let mut x = xu0;
    x.extend_from_slice(&xv0);

    let r = robin_ratio(cap_a, h);
    let rho_ref = (pairwise_sum(&ru) + pairwise_sum(&rv)) / T::from_count(ru.len() + rv.len());
    let pc = ViscousPrecond::new(&g);
    let apply = |x: &[T], y: &mut [T]| {
        let p = Padded::from_interior(nx, ny, &x[..nu_], &x[nu_..], r);
        let (yu, yv) = y.split_at_mut(nu_);
        op.apply_padded(&p, yu, yv);
    };
    let precond = |x: &[T], y: &mut [T]| {
        let (yu, yv) = y.split_at_mut(nu_);
        pc.apply(rho_ref, dt, op.mu, op.gd, &x[..nu_], &x[nu_..], yu, yv);
    };
    let tol = cfg.visc_tol.max(T::lit(16.0) * T::epsilon());
    let rep = pcg("viscous solve", apply, precond, None, &b, &mut x, Stop::Relative(tol), cfg.visc_maxit)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(first_bad("velocity", &x, nx, t0));
    }

    let mut vel = Velocity::zeros(g);
    ops::scatter_interior(&mut vel, &x[..nu_], &x[nu_..]);
    ops::fill_boundary(&mut vel, &edges1, cap_a);

    let pad1 = Padded::from_velocity(&vel, &edges1, cap_a);
    let max_div = crate::sum::max_abs(&ops::divergence(&pad1, h));
    let report = StepReport { dt_used: dt, visc_iters: rep.iterations, max_div, bc_residual: slip_residual(&vel, cap_a) };
    Ok((State { rho: rho1, vel, t: t1 }, report))
}

/// Receives sampled states from [`run`].
pub trait Sink<T> {
    /// `prev` is the state one step before `state`, when there is one.
    fn record(&mut self, state: &State<T>, prev: Option<&State<T>>) -> Result<()>;

    /// Called with the last good state before an abort.
    fn checkpoint(&mut self, _state: &State<T>) -> Result<()> {
        Ok(())
    }
}

impl<T, F> Sink<T> for F
where
    F: FnMut(&State<T>, Option<&State<T>>) -> Result<()>,
{
    fn record(&mut self, state: &State<T>, prev: Option<&State<T>>) -> Result<()> {
        self(state, prev)
    }
}

/// Sampling schedule: samples at `k * every` for integer `k`, plus the
/// initial state.
pub struct Schedule<T> {
    every: T,
    next_k: u64,
}

impl<T: Real> Schedule<T> {
    pub(crate) fn new(t0: T, every: T) -> Result<Self> {
        if !(every > T::zero()) || !every.is_finite() {
            return Err(Error::Params(format!("sample_every must be positive, got {every}")));
        }
        let mut k = (t0 / every).floor().to_u64().unwrap_or(0);
        while T::lit(k as f64) * every <= t0 {
            k += 1;
        }
        Ok(Schedule { every, next_k: k })
    }

    pub(crate) fn next_time(&self) -> T {
        T::lit(self.next_k as f64) * self.every
    }

    pub(crate) fn advance(&mut self) {
        self.next_k += 1;
    }
}

/// Shared trajectory loop for both steppers.
pub fn drive<T, S, D, K>(state0: State<T>, t_end: T, sample_every: T, budget: Option<Duration>, sink: &mut K, mut dt_of: D, mut step_of: S) -> Result<State<T>>
where
    T: Real,
    D: FnMut(&State<T>) -> Result<T>,
    S: FnMut(&State<T>, T) -> Result<State<T>>,
    K: Sink<T> + ?Sized,
{
    state0.validate()?;
    if !(t_end >= state0.t) {
        return Err(Error::Params(format!("t_end = {t_end} precedes the initial time {}", state0.t)));
    }
    if t_end == state0.t {
        return Ok(state0);
    }
    let mut sched = Schedule::new(state0.t, sample_every)?;
    let start = Instant::now();
    sink.record(&state0, None)?;
    let mut state = state0;
    while state.t < t_end {
        if let Some(b) = budget {
            if start.elapsed() > b {
                sink.checkpoint(&state)?;
                return Err(Error::Budget(start.elapsed().as_secs_f64()));
            }
        }
        let target = sched.next_time().min(t_end);
        let mut dt = dt_of(&state)?;
        let mut hit = false;
        if state.t + dt >= target {
            dt = target - state.t;
            hit = true;
        }
        let mut next = match step_of(&state, dt) {
            Ok(s) => s,
            Err(e) => {
                sink.checkpoint(&state)?;
                return Err(e);
            }
        };
        if hit {
            next.t = target;
        }
        let sampled = hit && (next.t == sched.next_time() || next.t == t_end);
        if hit && next.t == sched.next_time() {
            sched.advance();
        }
        if sampled {
            sink.record(&next, Some(&state))?;
        }
        state = next;
    }
    Ok(state)
}

/// Integrates from `state0` to `t_end`, recording the initial state and every
/// multiple of `sample_every` (and `t_end`) into `sink`.
pub fn run<T: Real, K: Sink<T> + ?Sized>(
    state0: State<T>,
    params: &FluidParams<T>,
    cfg: &StepperConfig<T>,
    t_end: T,
    sample_every: T,
    sink: &mut K,
) -> Result<State<T>> {
    cfg.validate()?;
    let g = *state0.grid();
    drive(
        state0,
        t_end,
        sample_every,
        cfg.wall_budget,
        sink,
        |s| cfl_dt(s, params, &g, cfg),
        |s, dt| step(s, params, cfg, dt).map(|(s, _)| s),
    )
}
