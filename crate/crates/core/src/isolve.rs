//! Projection stepper for the inhomogeneous incompressible limit system on
//! the same MAC grid and with the same slip wall.

use rustdct::DctPlanner;

use crate::csolve::ops::{self, Edges, Padded, ViscousOp, ViscousPrecond};
use crate::csolve::{drive, robin_ratio, Sink};
use crate::error::{Error, Result};
use crate::linalg::krylov::{pcg, remove_mean, Stop};
use crate::linalg::transform::{Line, Separable};
use crate::model::{Field, FluidParams, Grid, Loc, State, Velocity};
use crate::scalar::Real;
use crate::sum::{max_abs, pairwise_sum};

/// Divergence bound guaranteed after every projection.
pub const DIV_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IConfig<T> {
    /// Advective Courant factor.
    pub cfl: T,
    /// Upper bound on the step, used while the flow is at rest.
    pub dt_max: T,
    pub visc_tol: T,
    pub maxit: usize,
    pub rho_floor: T,
    pub wall_budget: Option<std::time::Duration>,
}

impl<T: Real> Default for IConfig<T> {
    fn default() -> Self {
        IConfig {
            cfl: T::lit(0.4),
            dt_max: T::lit(0.02),
            visc_tol: T::lit(1e-10),
            maxit: 2000,
            rho_floor: T::lit(1e-10),
            wall_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IProjection<T> {
    /// Zero-mean pressure at cell centers.
    pub pressure: Field<T>,
    /// `max |div u|` after the projection.
    pub div_residual: T,
    pub iterations: usize,
    /// Fraction of interior faces whose density was raised to the floor.
    pub floored_fraction: T,
}

struct NeumannPrecond<T: Real> {
    s: Separable<T>,
    lam: Vec<T>,
}

impl<T: Real> NeumannPrecond<T> {
    fn new(g: &Grid<T>) -> Self {
        let (nx, ny) = (g.nx(), g.ny());
        let mut p = DctPlanner::new();
        let s = Separable { x: Line::cos_half(&mut p, nx), y: Line::cos_half(&mut p, ny) };
        let inv_h2 = T::one() / (g.h() * g.h());
        let mut lam = vec![T::zero(); nx * ny];
        for l in 0..ny {
            for k in 0..nx {
                let (a, b) = (s.x.symbol(k), s.y.symbol(l));
                lam[l * nx + k] = (a * a + b * b) * inv_h2 * s.norm2(k, l);
            }
        }
        NeumannPrecond { s, lam }
    }

    /// `scale * (-Lap_N)^+ r`.
    fn apply(&self, scale: T, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
        self.s.analysis(z);
        z[0] = T::zero();
        for (k, v) in z.iter_mut().enumerate().skip(1) {
            *v = *v * scale / self.lam[k];
        }
        self.s.synthesis(z);
    }
}

/// `-div(beta grad phi)` with zero flux through every edge.
fn neg_weighted_laplacian<T: Real>(phi: &[T], bu: &[T], bv: &[T], g: &Grid<T>, out: &mut [T]) {
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h2 = T::one() / (g.h() * g.h());
    for j in 0..ny {
        for i in 0..nx {
            let c = phi[j * nx + i];
            let mut acc = T::zero();
            if i + 1 < nx {
                acc += bu[j * (nx - 1) + i] * (phi[j * nx + i + 1] - c);
            }
            if i > 0 {
                acc -= bu[j * (nx - 1) + i - 1] * (c - phi[j * nx + i - 1]);
            }
            if j + 1 < ny {
                acc += bv[j * nx + i] * (phi[(j + 1) * nx + i] - c);
            }
            if j > 0 {
                acc -= bv[(j - 1) * nx + i] * (c - phi[(j - 1) * nx + i]);
            }
            out[j * nx + i] = -acc * inv_h2;
        }
    }
}

/// Advective step bound `cfl h / max |u|`, capped at `dt_max`.
pub fn advective_dt<T: Real>(state: &State<T>, cfg: &IConfig<T>) -> Result<T> {
    if !state.vel.all_finite() {
        return Err(Error::NonFinite(format!("velocity at t = {}", state.t)));
    }
    let s = state.vel.max_speed();
    let dt = if s > T::zero() { cfg.cfl * state.grid().h() / s } else { cfg.dt_max };
    Ok(dt.min(cfg.dt_max))
}

/// One projection step: transport, viscous predictor, variable-density
/// projection, slip fill.
pub fn istep<T: Real>(state: &State<T>, params: &FluidParams<T>, cfg: &IConfig<T>, dt: T) -> Result<(State<T>, IProjection<T>)> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Params(format!("step size must be positive and finite, got {dt}")));
    }
    let g = *state.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let cap_a = params.cap_a();
    let edges = Edges::zero(&g);
    let pad0 = Padded::from_velocity(&state.vel, &edges, cap_a);

    let rho1 = ops::continuity(&state.rho, &pad0, params.rho_far(), dt);
    if !rho1.all_finite() || rho1.min() < T::zero() {
        return Err(Error::State(format!("density left the admissible range during step from t = {}", state.t)));
    }
    let (ru, rv) = ops::face_density(&rho1, cfg.rho_floor);
    let floored = ru.iter().chain(&rv).filter(|&&r| r <= cfg.rho_floor).count();

    let (cu, cv) = ops::convection(&pad0, h);
    let (xu0, xv0) = ops::gather_interior(&state.vel);
    let nu_ = xu0.len();
    let mut b: Vec<T> = (0..nu_).map(|k| ru[k] * (xu0[k] - dt * cu[k])).collect();
    b.extend((0..xv0.len()).map(|k| rv[k] * (xv0[k] - dt * cv[k])));
    let mut x = xu0;
    x.extend_from_slice(&xv0);

    let op = ViscousOp { rho_u: &ru, rho_v: &rv, dt, mu: params.mu(), gd: T::zero(), h };
    let r = robin_ratio(cap_a, h);
    let rho_ref = (pairwise_sum(&ru) + pairwise_sum(&rv)) / T::from_count(ru.len() + rv.len());
    let pc = ViscousPrecond::new(&g);
    let tol = cfg.visc_tol.max(T::lit(16.0) * T::epsilon());
    pcg(
        "momentum predictor",
        |x: &[T], y: &mut [T]| {
            let p = Padded::from_interior(nx, ny, &x[..nu_], &x[nu_..], r);
            let (yu, yv) = y.split_at_mut(nu_);
            op.apply_padded(&p, yu, yv);
        },
        |x: &[T], y: &mut [T]| {
            let (yu, yv) = y.split_at_mut(nu_);
            pc.apply(rho_ref, dt, op.mu, T::zero(), &x[..nu_], &x[nu_..], yu, yv);
        },
        None,
        &b,
        &mut x,
        Stop::Relative(tol),
        cfg.maxit,
    )?;

    let mut vel = Velocity::zeros(g);
    ops::scatter_interior(&mut vel, &x[..nu_], &x[nu_..]);
    ops::fill_boundary(&mut vel, &edges, cap_a);
    let pstar = Padded::from_velocity(&vel, &edges, cap_a);
    let div_star = ops::divergence(&pstar, h);

    let bu: Vec<T> = ru.iter().map(|&r| T::one() / r).collect();
    let bv: Vec<T> = rv.iter().map(|&r| T::one() / r).collect();
    let beta_mean = (pairwise_sum(&bu) + pairwise_sum(&bv)) / T::from_count(bu.len() + bv.len());
    let mut rhs: Vec<T> = div_star.iter().map(|&d| -d / dt).collect();
    remove_mean(&mut rhs);
    let mut phi = vec![T::zero(); nx * ny];
    let npc = NeumannPrecond::new(&g);
    let project = |v: &mut [T]| remove_mean(v);
    let target = (T::lit(0.1 * DIV_TOL) / dt).max(T::lit(64.0) * T::epsilon() * max_abs(&rhs));
    let rep = pcg(
        "pressure projection",
        |x: &[T], y: &mut [T]| neg_weighted_laplacian(x, &bu, &bv, &g, y),
        |x: &[T], y: &mut [T]| npc.apply(T::one() / beta_mean, x, y),
        Some(&project),
        &rhs,
        &mut phi,
        Stop::MaxAbs(target),
        cfg.maxit,
    )?;
    remove_mean(&mut phi);
    let (gu, gv) = ops::cell_gradient(&phi, &g);
    for k in 0..nu_ {
        x[k] -= dt * bu[k] * gu[k];
    }
    for k in 0..gv.len() {
        x[nu_ + k] -= dt * bv[k] * gv[k];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("velocity after projection at t = {}", state.t)));
    }
    ops::scatter_interior(&mut vel, &x[..nu_], &x[nu_..]);
    ops::fill_boundary(&mut vel, &edges, cap_a);
    let div_residual = max_abs(&ops::divergence(&Padded::from_velocity(&vel, &edges, cap_a), h));

    let proj = IProjection {
        pressure: Field::from_vec(g, Loc::Cell, phi)?,
        div_residual,
        iterations: rep.iterations,
        floored_fraction: T::from_count(floored) / T::from_count(ru.len() + rv.len()),
    };
    Ok((State { rho: rho1, vel, t: state.t + dt }, proj))
}

/// Projects a velocity onto the discretely divergence-free fields with
/// density weight `rho`, keeping the slip wall; used to prepare initial
/// data for [`irun`].
pub fn project_velocity<T: Real>(state: &State<T>, params: &FluidParams<T>, cfg: &IConfig<T>) -> Result<State<T>> {
    let g = *state.grid();
    let h = g.h();
    let edges = Edges::zero(&g);
    let (ru, rv) = ops::face_density(&state.rho, cfg.rho_floor);
    let bu: Vec<T> = ru.iter().map(|&r| T::one() / r).collect();
    let bv: Vec<T> = rv.iter().map(|&r| T::one() / r).collect();
    let mut vel = state.vel.clone();
    ops::fill_boundary(&mut vel, &edges, params.cap_a());
    let d = ops::divergence(&Padded::from_velocity(&vel, &edges, params.cap_a()), h);
    let mut rhs: Vec<T> = d.iter().map(|&v| -v).collect();
    remove_mean(&mut rhs);
    let beta_mean = (pairwise_sum(&bu) + pairwise_sum(&bv)) / T::from_count(bu.len() + bv.len());
    let npc = NeumannPrecond::new(&g);
    let project = |v: &mut [T]| remove_mean(v);
    let mut phi = vec![T::zero(); g.nx() * g.ny()];
    let target = T::lit(0.1 * DIV_TOL).max(T::lit(64.0) * T::epsilon() * max_abs(&rhs));
    pcg(
        "initial projection",
        |x: &[T], y: &mut [T]| neg_weighted_laplacian(x, &bu, &bv, &g, y),
        |x: &[T], y: &mut [T]| npc.apply(T::one() / beta_mean, x, y),
        Some(&project),
        &rhs,
        &mut phi,
        Stop::MaxAbs(target),
        cfg.maxit,
    )?;
    let (gu, gv) = ops::cell_gradient(&phi, &g);
    let (mut xu, mut xv) = ops::gather_interior(&vel);
    for k in 0..xu.len() {
        xu[k] -= bu[k] * gu[k];
    }
    for k in 0..xv.len() {
        xv[k] -= bv[k] * gv[k];
    }
    ops::scatter_interior(&mut vel, &xu, &xv);
    ops::fill_boundary(&mut vel, &edges, params.cap_a());
    Ok(State { rho: state.rho.clone(), vel, t: state.t })
}

/// Integrates the limit system from `state0` to `t_end`; sampling as in
/// [`crate::csolve::run`].
pub fn irun<T: Real, K: Sink<T> + ?Sized>(
    state0: State<T>,
    params: &FluidParams<T>,
    cfg: &IConfig<T>,
    t_end: T,
    sample_every: T,
    sink: &mut K,
) -> Result<State<T>> {
    drive(
        state0,
        t_end,
        sample_every,
        cfg.wall_budget,
        sink,
        |s| advective_dt(s, cfg),
        |s, dt| istep(s, params, cfg, dt).map(|(s, _)| s),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_state, make_grid, make_params};

    fn psi(x: f64, y: f64) -> f64 {
        0.5 * y * y * (-(x * x + (y - 1.0) * (y - 1.0)) * 1.5).exp()
    }

    fn vortex(g: Grid<f64>) -> impl Fn(f64, f64) -> (f64, f64) {
        let h = g.h();
        move |x, y| ((psi(x, y + h / 2.0) - psi(x, y - h / 2.0)) / h, -(psi(x + h / 2.0, y) - psi(x - h / 2.0, y)) / h)
    }

    #[test]
    fn rest_state_is_unchanged() {
        let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
        let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
        let (s, _) = init_state(g, |_, _| 1.0, |_, _| (0.0, 0.0), &p, false).unwrap();
        let (s1, proj) = istep(&s, &p, &IConfig::default(), 0.01).unwrap();
        assert_eq!(s1.rho, s.rho);
        assert!(s1.vel.max_speed() == 0.0);
        assert!(proj.pressure.max_abs() == 0.0);
    }

    #[test]
    fn projection_leaves_divergence_below_tolerance() {
        let g = make_grid::<f64>(3.0, 3.0, 64, 32).unwrap();
        let p = make_params(0.5, 0.0, 2.0, 0.0, 1.0).unwrap();
        let (mut s, _) = init_state(g, |x, y| 1.0 + 0.5 * (-(x * x + (y - 1.5).powi(2)) * 3.0).exp(), vortex(g), &p, false).unwrap();
        let cfg = IConfig::default();
        for _ in 0..5 {
            let dt = advective_dt(&s, &cfg).unwrap();
            let (n, proj) = istep(&s, &p, &cfg, dt).unwrap();
            assert!(proj.div_residual <= DIV_TOL, "{}", proj.div_residual);
            assert!(proj.pressure.integral().abs() < 1e-12);
            s = n;
        }
    }

    #[test]
    fn transport_conserves_mass_and_extrema() {
        let g = make_grid::<f64>(3.0, 3.0, 48, 24).unwrap();
        let p = make_params(0.2, 0.0, 2.0, 0.0, 1.0).unwrap();
        let blob = |x: f64, y: f64| if (x * x + (y - 1.2).powi(2)) < 0.3 { 2.0 } else { 1.0 };
        let (s, _) = init_state(g, blob, vortex(g), &p, false).unwrap();
        let cfg = IConfig::default();
        let mut s = project_velocity(&s, &p, &cfg).unwrap();
        let m0 = s.mass();
        for _ in 0..40 {
            let dt = advective_dt(&s, &cfg).unwrap();
            let (lo, hi) = (s.rho.min(), s.rho.max());
            s = istep(&s, &p, &cfg, dt).unwrap().0;
            assert!(s.rho.min() >= lo - 1e-10 && s.rho.max() <= hi + 1e-10);
        }
        assert!(((s.mass() - m0) / m0).abs() <= 1e-12);
    }
}
