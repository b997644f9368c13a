//! Mirror extensions across the wall and the whole-plane Poisson solve.
//!
//! Rows of cell and x-face data sit at `y = (j + 1/2) h`, so the mirror of
//! row `j` is a new row at `-(j + 1/2) h`. Rows of y-face and node data sit
//! at `y = j h`; row 0 lies on the wall and is shared by both halves.

use crate::error::{Error, Result};
use crate::linalg::krylov::{pcg, remove_mean, Stop};
use crate::linalg::transform::{transform_friendly, PeriodicPoisson};
use crate::model::{Field, Grid, Loc};
use crate::scalar::Real;
use crate::sum::{max_abs, pairwise_map_sum, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Field on the doubled box `[-lx, lx] x [-ly, ly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WholeField<T> {
    grid: Grid<T>,
    loc: Loc,
    parity: Parity,
    data: Vec<T>,
}

impl<T: Real> WholeField<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn loc(&self) -> Loc {
        self.loc
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn ni(&self) -> usize {
        self.grid.extent(self.loc).0
    }

    /// Row count on the doubled box.
    pub fn nj(&self) -> usize {
        whole_rows(&self.grid, self.loc)
    }

    /// Index of the whole row holding half row `j`.
    pub fn upper_row(&self, j: usize) -> usize {
        self.grid.ny() + j
    }

    /// Index of the whole row mirroring half row `j`.
    pub fn mirror_row(&self, j: usize) -> usize {
        if self.loc.y_on_nodes() {
            self.grid.ny() - j
        } else {
            self.grid.ny() - 1 - j
        }
    }

    pub fn at(&self, i: usize, jw: usize) -> T {
        self.data[jw * self.ni() + i]
    }

    /// y coordinate of whole row `jw`.
    pub fn y(&self, jw: usize) -> T {
        let h = self.grid.h();
        let k = T::from_count(jw) - T::from_count(self.grid.ny());
        if self.loc.y_on_nodes() {
            k * h
        } else {
            (k + T::half()) * h
        }
    }

    /// Builds a whole field from raw data, without any symmetry.
    pub fn from_raw(grid: Grid<T>, loc: Loc, data: Vec<T>) -> Result<Self> {
        let n = grid.extent(loc).0 * whole_rows(&grid, loc);
        if data.len() != n {
            return Err(Error::Incompatible(format!("whole {loc:?} field needs {n} samples, got {}", data.len())));
        }
        Ok(WholeField { grid, loc, parity: Parity::None, data })
    }

    /// Exact mirrored-equality scan for the recorded parity.
    pub fn parity_holds(&self) -> bool {
        let ni = self.ni();
        let rows = if self.loc.y_on_nodes() { self.grid.ny() + 1 } else { self.grid.ny() };
        for j in 0..rows {
            let (a, b) = (self.upper_row(j), self.mirror_row(j));
            for i in 0..ni {
                let (p, m) = (self.at(i, a), self.at(i, b));
                let ok = match self.parity {
                    Parity::Even => p == m,
                    Parity::Odd => p == -m && (a != b || p == T::zero()),
                    Parity::None => true,
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Half of the whole field, as a half-plane [`Field`].
    pub fn restrict(&self) -> Field<T> {
        let ni = self.ni();
        let rows = self.grid.extent(self.loc).1;
        let start = self.upper_row(0) * ni;
        Field::from_vec(self.grid, self.loc, self.data[start..start + rows * ni].to_vec()).expect("layout")
    }

    /// Sum of squared differences between horizontally and vertically
    /// adjacent samples (no wrap-around).
    pub fn gradient_energy(&self) -> T {
        let (ni, nj) = (self.ni(), self.nj());
        let mut rows = Vec::with_capacity(2 * nj);
        for j in 0..nj {
            let r = &self.data[j * ni..(j + 1) * ni];
            rows.push(sq_diffs(r));
            if j + 1 < nj {
                let s = &self.data[(j + 1) * ni..(j + 2) * ni];
                rows.push(pair_sq(r, s));
            }
        }
        pairwise_sum(&rows)
    }
}

fn whole_rows<T: Real>(g: &Grid<T>, loc: Loc) -> usize {
    if loc.y_on_nodes() {
        2 * g.ny() + 1
    } else {
        2 * g.ny()
    }
}

fn sq_diffs<T: Real>(r: &[T]) -> T {
    let d: Vec<T> = r.windows(2).map(|w| w[1] - w[0]).collect();
    pairwise_map_sum(&d, |x| x * x)
}

fn pair_sq<T: Real>(a: &[T], b: &[T]) -> T {
    let d: Vec<T> = a.iter().zip(b).map(|(x, y)| *y - *x).collect();
    pairwise_map_sum(&d, |x| x * x)
}

/// Gradient energy of half-plane data matched to the extension with
/// `parity`: node-row data weight the wall row by 1/2, center-row data add
/// half the jump to the mirrored ghost row. The whole-field energy of the
/// extension is exactly twice this value.
pub fn gradient_energy<T: Real>(f: &Field<T>, parity: Parity) -> T {
    let nj = f.nj();
    let mut rows = Vec::with_capacity(2 * nj + 1);
    for j in 0..nj {
        let e = sq_diffs(f.row(j));
        rows.push(if f.loc().y_on_nodes() && j == 0 { e * T::half() } else { e });
        if j + 1 < nj {
            rows.push(pair_sq(f.row(j), f.row(j + 1)));
        }
    }
    if !f.loc().y_on_nodes() && parity == Parity::Odd {
        let r = f.row(0);
        let jump: Vec<T> = r.iter().map(|&v| v + v).collect();
        rows.push(pairwise_map_sum(&jump, |x| x * x) * T::half());
    }
    pairwise_sum(&rows)
}

fn extend<T: Real>(f: &Field<T>, parity: Parity) -> WholeField<T> {
    let g = *f.grid();
    let loc = f.loc();
    let ni = f.ni();
    let nw = whole_rows(&g, loc);
    let mut w = WholeField { grid: g, loc, parity, data: vec![T::zero(); ni * nw] };
    for j in 0..f.nj() {
        let (a, b) = (w.upper_row(j), w.mirror_row(j));
        for i in 0..ni {
            let v = f.at(i, j);
            w.data[a * ni + i] = v;
            w.data[b * ni + i] = if parity == Parity::Odd { -v } else { v };
        }
    }
    if parity == Parity::Odd && loc.y_on_nodes() {
        let a = w.upper_row(0);
        w.data[a * ni..(a + 1) * ni].iter_mut().for_each(|v| *v = T::zero());
    }
    w
}

/// Even mirror across the wall. Y-face data (a normal component) has no
/// even extension consistent with the wall and is rejected.
pub fn even_extend<T: Real>(f: &Field<T>) -> Result<WholeField<T>> {
    if f.loc() == Loc::YFace {
        return Err(Error::Incompatible("y-face fields have no even mirror; use odd_extend or vector_extend".into()));
    }
    Ok(extend(f, Parity::Even))
}

/// Odd mirror across the wall. Data on node rows must vanish on the wall.
pub fn odd_extend<T: Real>(g: &Field<T>) -> Result<WholeField<T>> {
    if g.loc().y_on_nodes() {
        let trace = max_abs(g.row(0));
        let scale = T::one().max(g.max_abs());
        if trace > T::lit(1e-12) * scale {
            return Err(Error::Incompatible(format!("odd extension needs a zero wall trace, found {trace}")));
        }
    }
    Ok(extend(g, Parity::Odd))
}

/// First component even, second component odd.
pub fn vector_extend<T: Real>(v1: &Field<T>, v2: &Field<T>) -> Result<(WholeField<T>, WholeField<T>)> {
    if v1.loc() != Loc::XFace || v2.loc() != Loc::YFace || v1.grid() != v2.grid() {
        return Err(Error::Incompatible("vector_extend expects an x-face/y-face pair on one grid".into()));
    }
    Ok((even_extend(v1)?, odd_extend(v2)?))
}

/// Cell divergence of an extended face pair on the doubled box.
pub fn whole_divergence<T: Real>(v1: &WholeField<T>, v2: &WholeField<T>) -> WholeField<T> {
    let g = v1.grid;
    let (nx, nw) = (g.nx(), 2 * g.ny());
    let inv_h = T::one() / g.h();
    let mut d = vec![T::zero(); nx * nw];
    for j in 0..nw {
        for i in 0..nx {
            d[j * nx + i] = ((v1.at(i + 1, j) - v1.at(i, j)) + (v2.at(i, j + 1) - v2.at(i, j))) * inv_h;
        }
    }
    let parity = match (v1.parity, v2.parity) {
        (Parity::Even, Parity::Odd) => Parity::Even,
        _ => Parity::None,
    };
    WholeField { grid: g, loc: Loc::Cell, parity, data: d }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonBackend {
    /// FFT when the doubled box sizes factor over {2, 3, 5, 7}, otherwise CG.
    Auto,
    Transform,
    Iterative,
}

/// Periodic 5-point Laplacian of whole cell data.
pub fn whole_laplacian<T: Real>(f: &WholeField<T>) -> Vec<T> {
    let g = f.grid;
    let (ni, nj) = (g.nx(), 2 * g.ny());
    let inv_h2 = T::one() / (g.h() * g.h());
    let mut out = vec![T::zero(); ni * nj];
    lap_periodic(&f.data, &mut out, ni, nj, inv_h2);
    out
}

fn lap_periodic<T: Real>(x: &[T], y: &mut [T], ni: usize, nj: usize, inv_h2: T) {
    let four = T::lit(4.0);
    for j in 0..nj {
        let jn = (j + 1) % nj;
        let js = (j + nj - 1) % nj;
        for i in 0..ni {
            let ie = (i + 1) % ni;
            let iw = (i + ni - 1) % ni;
            y[j * ni + i] = (x[j * ni + ie] + x[j * ni + iw] + x[jn * ni + i] + x[js * ni + i] - four * x[j * ni + i]) * inv_h2;
        }
    }
}

/// Solves `Lap phi = rhs` on the doubled box with periodic wrap in both
/// directions, normalized to zero mean. The parity of `rhs` is carried over
/// exactly.
pub fn poisson_whole<T: Real>(rhs: &WholeField<T>) -> Result<WholeField<T>> {
    poisson_whole_with(rhs, PoissonBackend::Auto)
}

pub fn poisson_whole_with<T: Real>(rhs: &WholeField<T>, backend: PoissonBackend) -> Result<WholeField<T>> {
    if rhs.loc != Loc::Cell {
        return Err(Error::Incompatible("poisson_whole works on cell data".into()));
    }
    let g = rhs.grid;
    let (ni, nj) = (g.nx(), 2 * g.ny());
    let n = T::from_count(ni * nj);
    let mean = pairwise_sum(&rhs.data) / n;
    let scale = max_abs(&rhs.data);
    if mean.abs() > T::lit(1e-12) * scale.max(T::min_positive_value()) && mean != T::zero() {
        return Err(Error::Incompatible(format!("poisson_whole needs a zero-mean right-hand side (mean {mean})")));
    }
    let use_fft = match backend {
        PoissonBackend::Auto => transform_friendly(ni) && transform_friendly(nj),
        PoissonBackend::Transform => true,
        PoissonBackend::Iterative => false,
    };
    let mut phi = if use_fft {
        PeriodicPoisson::new(ni, nj, g.h()).solve(&rhs.data)
    } else {
        let inv_h2 = T::one() / (g.h() * g.h());
        let mut b: Vec<T> = rhs.data.iter().map(|&v| -v).collect();
        remove_mean(&mut b);
        let mut x = vec![T::zero(); ni * nj];
        let project = |v: &mut [T]| remove_mean(v);
        let tol = T::lit(1e-14).max(T::lit(16.0) * T::epsilon());
        pcg(
            "whole-plane Poisson",
            |x: &[T], y: &mut [T]| {
                lap_periodic(x, y, ni, nj, inv_h2);
                y.iter_mut().for_each(|v| *v = -*v);
            },
            |r: &[T], z: &mut [T]| z.copy_from_slice(r),
            Some(&project),
            &b,
            &mut x,
            Stop::Relative(tol),
            20 * (ni + nj) + 1000,
        )?;
        x
    };
    remove_mean(&mut phi);
    let mut out = WholeField { grid: g, loc: Loc::Cell, parity: rhs.parity, data: phi };
    symmetrize(&mut out);
    Ok(out)
}

fn symmetrize<T: Real>(w: &mut WholeField<T>) {
    if w.parity == Parity::None {
        return;
    }
    let ni = w.ni();
    for j in 0..w.grid.ny() {
        let (a, b) = (w.upper_row(j), w.mirror_row(j));
        for i in 0..ni {
            let (p, m) = (w.data[a * ni + i], w.data[b * ni + i]);
            let (np, nm) = match w.parity {
                Parity::Even => {
                    let s = T::half() * (p + m);
                    (s, s)
                }
                _ => {
                    let s = T::half() * (p - m);
                    (s, -s)
                }
            };
            w.data[a * ni + i] = np;
            w.data[b * ni + i] = nm;
        }
    }
}

/// Solves the Neumann problem `Lap G = div v`, `dG/dn = v.n` by even
/// reflection: the first component is mirrored evenly, the second oddly,
/// the cell divergence is taken on the doubled box and the periodic
/// Poisson solution is restricted back to the half plane.
///
/// The discrete mean of the divergence (the net flux through the artificial
/// edges) is removed before the solve.
pub fn solve_g_neumann<T: Real>(v1: &Field<T>, v2: &Field<T>, grid: &Grid<T>) -> Result<Field<T>> {
    if v1.grid() != grid || v2.grid() != grid {
        return Err(Error::Incompatible("solve_g_neumann: field grid differs from the requested grid".into()));
    }
    let (e1, e2) = vector_extend(v1, v2)?;
    let mut d = whole_divergence(&e1, &e2);
    remove_mean(&mut d.data);
    symmetrize(&mut d);
    Ok(poisson_whole(&d)?.restrict())
}
