//! MAC stencils shared by the compressible and incompressible steppers.
//!
//! Interior unknowns: first component on faces `i = 1..nx-1`, all rows;
//! second component on all columns, rows `j = 1..ny-1`. Faces on the far
//! edges carry Dirichlet data and the wall row of the second component is 0.

use std::sync::Arc;

use rayon::prelude::*;
use rustdct::DctPlanner;

use crate::linalg::transform::{Line, Separable};
use crate::model::{Field, Grid, Velocity};
use crate::scalar::Real;

/// Vector-valued function of `(x, y, t)`.
pub type VecFn<T> = Arc<dyn Fn(T, T, T) -> (T, T) + Send + Sync>;

/// `u_ghost / u_wall` for the Robin condition `d2 u1 = A u1` imposed at the
/// wall with a centered difference.
pub fn robin_ratio<T: Real>(cap_a: T, h: T) -> T {
    let s = cap_a * h * T::half();
    (T::one() - s) / (T::one() + s)
}

/// Velocity data on the three far-field edges at one time level.
#[derive(Debug, Clone)]
pub struct Edges<T> {
    /// First component on the faces `i = 0` and `i = nx`, per row.
    pub u_left: Vec<T>,
    pub u_right: Vec<T>,
    /// Second component on the top faces `j = ny`, per column.
    pub v_top: Vec<T>,
    /// Tangential data used by the ghost layers: second component along
    /// `x = -lx` and `x = lx` at node rows, first component along `y = ly` at
    /// face columns.
    pub v_left: Vec<T>,
    pub v_right: Vec<T>,
    pub u_top: Vec<T>,
}

impl<T: Real> Edges<T> {
    pub fn zero(g: &Grid<T>) -> Self {
        let (nx, ny) = (g.nx(), g.ny());
        Edges {
            u_left: vec![T::zero(); ny],
            u_right: vec![T::zero(); ny],
            v_top: vec![T::zero(); nx],
            v_left: vec![T::zero(); ny + 1],
            v_right: vec![T::zero(); ny + 1],
            u_top: vec![T::zero(); nx + 1],
        }
    }

    pub fn sample(g: &Grid<T>, f: &VecFn<T>, t: T) -> Self {
        let (nx, ny) = (g.nx(), g.ny());
        let (lx, ly) = (g.lx(), g.ly());
        Edges {
            u_left: (0..ny).map(|j| f(-lx, g.yc(j), t).0).collect(),
            u_right: (0..ny).map(|j| f(lx, g.yc(j), t).0).collect(),
            v_top: (0..nx).map(|i| f(g.xc(i), ly, t).1).collect(),
            v_left: (0..=ny).map(|j| f(-lx, g.yf(j), t).1).collect(),
            v_right: (0..=ny).map(|j| f(lx, g.yf(j), t).1).collect(),
            u_top: (0..=nx).map(|i| f(g.xf(i), ly, t).0).collect(),
        }
    }
}

/// Writes edge data, the wall condition and the slip ghost row.
pub fn fill_boundary<T: Real>(vel: &mut Velocity<T>, edges: &Edges<T>, cap_a: T) {
    let g = *vel.grid();
    let (nx, ny) = (g.nx(), g.ny());
    for j in 0..ny {
        vel.u.set(0, j, edges.u_left[j]);
        vel.u.set(nx, j, edges.u_right[j]);
    }
    for i in 0..nx {
        vel.v.set(i, 0, T::zero());
        vel.v.set(i, ny, edges.v_top[i]);
    }
    let r = robin_ratio(cap_a, g.h());
    for i in 0..=nx {
        vel.wall_ghost[i] = r * vel.u.at(i, 0);
    }
}

/// Velocity with one ghost layer on every side.
///
/// `u` is `(nx+1) x (ny+2)` for rows `-1..=ny`; `v` is `(nx+2) x (ny+1)` for
/// columns `-1..=nx`.
pub struct Padded<T> {
    nx: usize,
    ny: usize,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Padded<T> {
    #[inline]
    pub fn u(&self, i: usize, j: isize) -> T {
        self.u[(j + 1) as usize * (self.nx + 1) + i]
    }

    #[inline]
    pub fn v(&self, i: isize, j: usize) -> T {
        self.v[j * (self.nx + 2) + (i + 1) as usize]
    }

    fn build(nx: usize, ny: usize, u_at: impl Fn(usize, usize) -> T, v_at: impl Fn(usize, usize) -> T, edges: Option<&Edges<T>>, r: T) -> Self {
        let wu = nx + 1;
        let mut u = vec![T::zero(); wu * (ny + 2)];
        for j in 0..ny {
            for i in 0..=nx {
                u[(j + 1) * wu + i] = u_at(i, j);
            }
        }
        for i in 0..=nx {
            u[i] = r * u[wu + i];
            let top = edges.map_or(T::zero(), |e| T::two() * e.u_top[i]);
            u[(ny + 1) * wu + i] = top - u[ny * wu + i];
        }
        let wv = nx + 2;
        let mut v = vec![T::zero(); wv * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                v[j * wv + i + 1] = v_at(i, j);
            }
            let (l, rr) = edges.map_or((T::zero(), T::zero()), |e| (T::two() * e.v_left[j], T::two() * e.v_right[j]));
            v[j * wv] = l - v[j * wv + 1];
            v[j * wv + nx + 1] = rr - v[j * wv + nx];
        }
        Padded { nx, ny, u, v }
    }

    /// Full velocity (boundary faces included) with ghosts from `edges`.
    pub fn from_velocity(vel: &Velocity<T>, edges: &Edges<T>, cap_a: T) -> Self {
        let g = vel.grid();
        let r = robin_ratio(cap_a, g.h());
        Self::build(g.nx(), g.ny(), |i, j| vel.u.at(i, j), |i, j| vel.v.at(i, j), Some(edges), r)
    }

    /// Full velocity whose row below the wall is the stored ghost row.
    pub fn from_stored(vel: &Velocity<T>, edges: &Edges<T>) -> Self {
        let mut p = Self::from_velocity(vel, edges, T::zero());
        p.u[..=p.nx].copy_from_slice(&vel.wall_ghost);
        p
    }

    /// Interior unknowns with homogeneous boundary data.
    pub fn from_interior(nx: usize, ny: usize, xu: &[T], xv: &[T], r: T) -> Self {
        let u_at = |i: usize, j: usize| if i == 0 || i == nx { T::zero() } else { xu[j * (nx - 1) + i - 1] };
        let v_at = |i: usize, j: usize| if j == 0 || j == ny { T::zero() } else { xv[(j - 1) * nx + i] };
        Self::build(nx, ny, u_at, v_at, None, r)
    }
}

pub fn n_u<T: Real>(g: &Grid<T>) -> usize {
    (g.nx() - 1) * g.ny()
}

pub fn n_v<T: Real>(g: &Grid<T>) -> usize {
    g.nx() * (g.ny() - 1)
}

/// Copies the interior unknowns out of a velocity.
pub fn gather_interior<T: Real>(vel: &Velocity<T>) -> (Vec<T>, Vec<T>) {
    let g = vel.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut xu = Vec::with_capacity(n_u(g));
    for j in 0..ny {
        xu.extend_from_slice(&vel.u.row(j)[1..nx]);
    }
    let mut xv = Vec::with_capacity(n_v(g));
    for j in 1..ny {
        xv.extend_from_slice(vel.v.row(j));
    }
    (xu, xv)
}

pub fn scatter_interior<T: Real>(vel: &mut Velocity<T>, xu: &[T], xv: &[T]) {
    let g = *vel.grid();
    let (nx, ny) = (g.nx(), g.ny());
    for j in 0..ny {
        vel.u.row_mut(j)[1..nx].copy_from_slice(&xu[j * (nx - 1)..(j + 1) * (nx - 1)]);
    }
    for j in 1..ny {
        vel.v.row_mut(j).copy_from_slice(&xv[(j - 1) * nx..j * nx]);
    }
}

/// Cell divergence.
pub fn divergence<T: Real>(p: &Padded<T>, h: T) -> Vec<T> {
    let (nx, ny) = (p.nx, p.ny);
    let inv_h = T::one() / h;
    let mut d = vec![T::zero(); nx * ny];
    d.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            *out = (p.u(i + 1, j as isize) - p.u(i, j as isize) + p.v(i as isize, j + 1) - p.v(i as isize, j)) * inv_h;
        }
    });
    d
}

/// Face densities at the interior unknowns, floored.
pub fn face_density<T: Real>(rho: &Field<T>, floor: T) -> (Vec<T>, Vec<T>) {
    let g = rho.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut ru = Vec::with_capacity(n_u(g));
    for j in 0..ny {
        for i in 1..nx {
            ru.push((T::half() * (rho.at(i - 1, j) + rho.at(i, j))).max(floor));
        }
    }
    let mut rv = Vec::with_capacity(n_v(g));
    for j in 1..ny {
        for i in 0..nx {
            rv.push((T::half() * (rho.at(i, j - 1) + rho.at(i, j))).max(floor));
        }
    }
    (ru, rv)
}

/// Gradient of a cell scalar at the interior unknowns.
pub fn cell_gradient<T: Real>(q: &[T], g: &Grid<T>) -> (Vec<T>, Vec<T>) {
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h = T::one() / g.h();
    let mut gu = Vec::with_capacity(n_u(g));
    for j in 0..ny {
        for i in 1..nx {
            gu.push((q[j * nx + i] - q[j * nx + i - 1]) * inv_h);
        }
    }
    let mut gv = Vec::with_capacity(n_v(g));
    for j in 1..ny {
        for i in 0..nx {
            gv.push((q[j * nx + i] - q[(j - 1) * nx + i]) * inv_h);
        }
    }
    (gu, gv)
}

/// Centered `u . grad u` at the interior unknowns.
pub fn convection<T: Real>(p: &Padded<T>, h: T) -> (Vec<T>, Vec<T>) {
    let (nx, ny) = (p.nx, p.ny);
    let c = T::one() / (T::two() * h);
    let q = T::lit(0.25);
    let mut cu = vec![T::zero(); (nx - 1) * ny];
    cu.par_chunks_mut(nx - 1).enumerate().for_each(|(j, row)| {
        let jj = j as isize;
        for (k, out) in row.iter_mut().enumerate() {
            let i = k + 1;
            let ii = i as isize;
            let vbar = q * (p.v(ii - 1, j) + p.v(ii, j) + p.v(ii - 1, j + 1) + p.v(ii, j + 1));
            *out = p.u(i, jj) * (p.u(i + 1, jj) - p.u(i - 1, jj)) * c + vbar * (p.u(i, jj + 1) - p.u(i, jj - 1)) * c;
        }
    });
    let mut cv = vec![T::zero(); nx * (ny - 1)];
    cv.par_chunks_mut(nx).enumerate().for_each(|(jm, row)| {
        let j = jm + 1;
        let jj = j as isize;
        for (i, out) in row.iter_mut().enumerate() {
            let ii = i as isize;
            let ubar = q * (p.u(i, jj - 1) + p.u(i + 1, jj - 1) + p.u(i, jj) + p.u(i + 1, jj));
            *out = ubar * (p.v(ii + 1, j) - p.v(ii - 1, j)) * c + p.v(ii, j) * (p.v(ii, j + 1) - p.v(ii, j - 1)) * c;
        }
    });
    (cu, cv)
}

/// Coefficients of `rho_hat I - dt (mu Lap + gd grad div)`.
pub struct ViscousOp<'a, T> {
    pub rho_u: &'a [T],
    pub rho_v: &'a [T],
    pub dt: T,
    pub mu: T,
    pub gd: T,
    pub h: T,
}

impl<'a, T: Real> ViscousOp<'a, T> {
    /// Operator rows at the interior unknowns, reading boundary values and
    /// ghosts from `p`.
    pub fn apply_padded(&self, p: &Padded<T>, out_u: &mut [T], out_v: &mut [T]) {
        let nx = p.nx;
        let h = self.h;
        let inv_h2 = T::one() / (h * h);
        let d = if self.gd != T::zero() { divergence(p, h) } else { Vec::new() };
        let lam = T::lit(4.0);
        let (dt, mu, gd) = (self.dt, self.mu, self.gd);
        out_u.par_chunks_mut(nx - 1).enumerate().for_each(|(j, row)| {
            let jj = j as isize;
            for (k, out) in row.iter_mut().enumerate() {
                let i = k + 1;
                let c = p.u(i, jj);
                let lap = (p.u(i + 1, jj) + p.u(i - 1, jj) + p.u(i, jj + 1) + p.u(i, jj - 1) - lam * c) * inv_h2;
                let gdiv = if d.is_empty() { T::zero() } else { (d[j * nx + i] - d[j * nx + i - 1]) / h };
                *out = self.rho_u[j * (nx - 1) + k] * c - dt * (mu * lap + gd * gdiv);
            }
        });
        out_v.par_chunks_mut(nx).enumerate().for_each(|(jm, row)| {
            let j = jm + 1;
            for (i, out) in row.iter_mut().enumerate() {
                let ii = i as isize;
                let c = p.v(ii, j);
                let lap = (p.v(ii + 1, j) + p.v(ii - 1, j) + p.v(ii, j + 1) + p.v(ii, j - 1) - lam * c) * inv_h2;
                let gdiv = if d.is_empty() { T::zero() } else { (d[j * nx + i] - d[(j - 1) * nx + i]) / h };
                *out = self.rho_v[jm * nx + i] * c - dt * (mu * lap + gd * gdiv);
            }
        });
    }
}

/// Exact inverse of the constant-density viscous operator on the free-slip
/// box, applied in the joint sine/cosine eigenbasis.
pub struct ViscousPrecond<T: Real> {
    nx: usize,
    ny: usize,
    su: Separable<T>,
    sv: Separable<T>,
    dk: Vec<T>,
    dl: Vec<T>,
}

impl<T: Real> ViscousPrecond<T> {
    pub fn new(g: &Grid<T>) -> Self {
        let (nx, ny) = (g.nx(), g.ny());
        let mut planner = DctPlanner::new();
        let su = Separable { x: Line::sine(&mut planner, nx - 1), y: Line::cos_half(&mut planner, ny) };
        let sv = Separable { x: Line::cos_half(&mut planner, nx), y: Line::sine(&mut planner, ny - 1) };
        let inv_h = T::one() / g.h();
        let cx = Line::<T>::cos_half(&mut planner, nx);
        let cy = Line::<T>::cos_half(&mut planner, ny);
        let dk = (0..nx).map(|k| cx.symbol(k) * inv_h).collect();
        let dl = (0..ny).map(|l| cy.symbol(l) * inv_h).collect();
        ViscousPrecond { nx, ny, su, sv, dk, dl }
    }

    pub fn apply(&self, rho_ref: T, dt: T, mu: T, gd: T, ru: &[T], rv: &[T], zu: &mut [T], zv: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        zu.copy_from_slice(ru);
        zv.copy_from_slice(rv);
        self.su.analysis(zu);
        self.sv.analysis(zv);
        let beta = dt * gd;
        for l in 0..ny {
            for k in 0..nx {
                let (dk, dl) = (self.dk[k], self.dl[l]);
                let d2 = dk * dk + dl * dl;
                let alpha = rho_ref + dt * mu * d2;
                let iu = if k >= 1 { Some(l * (nx - 1) + k - 1) } else { None };
                let iv = if l >= 1 { Some((l - 1) * nx + k) } else { None };
                let a = iu.map_or(T::zero(), |m| zu[m] / self.su.norm2(k - 1, l));
                let b = iv.map_or(T::zero(), |m| zv[m] / self.sv.norm2(k, l - 1));
                let fac = beta * (dk * a + dl * b) / (alpha * (alpha + beta * d2));
                if let Some(m) = iu {
                    zu[m] = a / alpha - dk * fac;
                }
                if let Some(m) = iv {
                    zv[m] = b / alpha - dl * fac;
                }
            }
        }
        self.su.synthesis(zu);
        self.sv.synthesis(zv);
    }
}

/// Ghosted density for the MUSCL reconstruction: two layers, far-field value
/// outside the artificial edges, mirror below the wall.
struct PaddedRho<T> {
    w: usize,
    d: Vec<T>,
}

impl<T: Real> PaddedRho<T> {
    fn new(rho: &Field<T>, far: T) -> Self {
        let g = rho.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let w = nx + 4;
        let mut d = vec![far; w * (ny + 4)];
        for j in -2..(ny as isize) {
            let src = if j < 0 { (-1 - j) as usize } else { j as usize };
            let base = (j + 2) as usize * w;
            d[base + 2..base + 2 + nx].copy_from_slice(rho.row(src));
        }
        PaddedRho { w, d }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> T {
        self.d[(j + 2) as usize * self.w + (i + 2) as usize]
    }
}

#[inline]
fn minmod<T: Real>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Upwind flux through a face with speed `s`, from the four cells straddling
/// it (`m2, m1 | p1, p2`).
#[inline]
fn muscl_flux<T: Real>(s: T, m2: T, m1: T, p1: T, p2: T) -> T {
    if s > T::zero() {
        s * (m1 + T::half() * minmod(m1 - m2, p1 - m1))
    } else if s < T::zero() {
        s * (p1 - T::half() * minmod(p1 - m1, p2 - p1))
    } else {
        T::zero()
    }
}

/// Forward Euler step of `rho_t + div(rho u) = 0` with limited upwind
/// fluxes. Edge fluxes use the far-field density as the outside state, so
/// with zero edge velocity the update conserves mass to rounding.
pub fn continuity<T: Real>(rho: &Field<T>, p: &Padded<T>, far: T, dt: T) -> Field<T> {
    let g = *rho.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let pr = PaddedRho::new(rho, far);
    let mut fx = vec![T::zero(); (nx + 1) * ny];
    fx.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        let jj = j as isize;
        for (i, f) in row.iter_mut().enumerate() {
            let ii = i as isize;
            *f = muscl_flux(p.u(i, jj), pr.at(ii - 2, jj), pr.at(ii - 1, jj), pr.at(ii, jj), pr.at(ii + 1, jj));
        }
    });
    let mut fy = vec![T::zero(); nx * (ny + 1)];
    fy.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let jj = j as isize;
        for (i, f) in row.iter_mut().enumerate() {
            let ii = i as isize;
            *f = muscl_flux(p.v(ii, j), pr.at(ii, jj - 2), pr.at(ii, jj - 1), pr.at(ii, jj), pr.at(ii, jj + 1));
        }
    });
    let lam = dt / g.h();
    let mut out = rho.clone();
    out.data_mut().par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, r) in row.iter_mut().enumerate() {
            let div = fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i] + fy[(j + 1) * nx + i] - fy[j * nx + i];
            *r -= lam * div;
        }
    });
    out
}

#[cfg(test)]
pub(crate) fn dense_apply<T: Real>(op: &ViscousOp<'_, T>, g: &Grid<T>, r: T, xu: &[T], xv: &[T]) -> (Vec<T>, Vec<T>) {
    let p = Padded::from_interior(g.nx(), g.ny(), xu, xv, r);
    let mut ou = vec![T::zero(); n_u(g)];
    let mut ov = vec![T::zero(); n_v(g)];
    op.apply_padded(&p, &mut ou, &mut ov);
    (ou, ov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, Loc};
    use crate::sum::pairwise_dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn viscous_operator_is_symmetric() {
        let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ru: Vec<f64> = (0..n_u(&g)).map(|_| rng.gen_range(0.5..2.0)).collect();
        let rv: Vec<f64> = (0..n_v(&g)).map(|_| rng.gen_range(0.5..2.0)).collect();
        let op = ViscousOp { rho_u: &ru, rho_v: &rv, dt: 0.1, mu: 1.0, gd: 3.0, h: g.h() };
        let r = robin_ratio(0.7, g.h());
        let (xu, xv) = (random(n_u(&g), &mut rng), random(n_v(&g), &mut rng));
        let (yu, yv) = (random(n_u(&g), &mut rng), random(n_v(&g), &mut rng));
        let (axu, axv) = dense_apply(&op, &g, r, &xu, &xv);
        let (ayu, ayv) = dense_apply(&op, &g, r, &yu, &yv);
        let lhs = pairwise_dot(&axu, &yu) + pairwise_dot(&axv, &yv);
        let rhs = pairwise_dot(&xu, &ayu) + pairwise_dot(&xv, &ayv);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn preconditioner_inverts_free_slip_box() {
        let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
        let pc = ViscousPrecond::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (bu, bv) = (random(n_u(&g), &mut rng), random(n_v(&g), &mut rng));
        let mut zu = vec![0.0; bu.len()];
        let mut zv = vec![0.0; bv.len()];
        pc.apply(1.3, 0.05, 1.0, 2.0, &bu, &bv, &mut zu, &mut zv);
        // Mirror ghosts for u at both y ends, mirror ghosts for v at both x ends.
        let (nx, ny, h) = (g.nx(), g.ny(), g.h());
        let uu = |i: usize, j: isize| -> f64 {
            if i == 0 || i == nx {
                return 0.0;
            }
            let j = j.clamp(0, ny as isize - 1) as usize;
            zu[j * (nx - 1) + i - 1]
        };
        let vv = |i: isize, j: usize| -> f64 {
            if j == 0 || j == ny {
                return 0.0;
            }
            let i = i.clamp(0, nx as isize - 1) as usize;
            zv[(j - 1) * nx + i]
        };
        let div = |i: usize, j: usize| (uu(i + 1, j as isize) - uu(i, j as isize) + vv(i as isize, j + 1) - vv(i as isize, j)) / h;
        for j in 0..ny {
            for i in 1..nx {
                let jj = j as isize;
                let lap = (uu(i + 1, jj) + uu(i - 1, jj) + uu(i, jj + 1) + uu(i, jj - 1) - 4.0 * uu(i, jj)) / (h * h);
                let gd = (div(i, j) - div(i - 1, j)) / h;
                let m = 1.3 * uu(i, jj) - 0.05 * (lap + 2.0 * gd);
                assert!((m - bu[j * (nx - 1) + i - 1]).abs() < 1e-10);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let ii = i as isize;
                let lap = (vv(ii + 1, j) + vv(ii - 1, j) + vv(ii, j + 1) + vv(ii, j - 1) - 4.0 * vv(ii, j)) / (h * h);
                let gd = (div(i, j) - div(i, j - 1)) / h;
                let m = 1.3 * vv(ii, j) - 0.05 * (lap + 2.0 * gd);
                assert!((m - bv[(j - 1) * nx + i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn continuity_conserves_mass_with_closed_edges() {
        let g = make_grid::<f64>(2.0, 2.0, 16, 8).unwrap();
        let rho = Field::from_fn(g, Loc::Cell, |x, y| (-(x * x + (y - 1.0) * (y - 1.0))).exp());
        let vel = Velocity::sample(g, |x, y| ((y).sin() * 0.3, x.sin() * y * (2.0 - y) * 0.2));
        let mut vel = vel;
        fill_boundary(&mut vel, &Edges::zero(&g), 0.0);
        let p = Padded::from_velocity(&vel, &Edges::zero(&g), 0.0);
        let out = continuity(&rho, &p, 0.0, 0.01);
        assert!((out.integral() - rho.integral()).abs() <= 1e-14 * rho.integral());
        assert!(out.min() >= 0.0);
    }
}
