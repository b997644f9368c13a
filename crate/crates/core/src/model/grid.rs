use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sum::{pairwise_map_sum, pairwise_sum};

/// Minimum cell count along either axis.
pub const MIN_CELLS: usize = 8;

/// Uniform square-cell truncation `[-lx, lx] x [0, ly]` of the half plane.
///
/// The edge `y = 0` is the physical wall; the other three edges are
/// artificial far-field edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    lx: T,
    ly: T,
    nx: usize,
    ny: usize,
    h: T,
}

pub fn make_grid<T: Real>(lx: T, ly: T, nx: usize, ny: usize) -> Result<Grid<T>> {
    if nx < MIN_CELLS || ny < MIN_CELLS {
        return Err(Error::Grid(format!(
            "below minimum resolution: nx = {nx}, ny = {ny} (need >= {MIN_CELLS})"
        )));
    }
    if !(lx > T::zero() && ly > T::zero()) || !lx.is_finite() || !ly.is_finite() {
        return Err(Error::Grid("extents must be positive and finite".into()));
    }
    let hx = T::two() * lx / T::from_count(nx);
    let hy = ly / T::from_count(ny);
    let tol = T::lit(16.0) * T::epsilon() * hx.max(hy);
    if (hx - hy).abs() > tol {
        return Err(Error::Grid(format!("h mismatch: {hx} vs {hy}")));
    }
    Ok(Grid { lx, ly, nx, ny, h: hx })
}

impl<T: Real> Grid<T> {
    pub fn lx(&self) -> T {
        self.lx
    }
    pub fn ly(&self) -> T {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> T {
        self.h
    }
    pub fn cell_area(&self) -> T {
        self.h * self.h
    }
    /// x coordinate of cell center `i`.
    pub fn xc(&self, i: usize) -> T {
        -self.lx + (T::from_count(i) + T::half()) * self.h
    }
    /// y coordinate of cell center `j`.
    pub fn yc(&self, j: usize) -> T {
        (T::from_count(j) + T::half()) * self.h
    }
    /// x coordinate of the vertical face (or node column) `i`.
    pub fn xf(&self, i: usize) -> T {
        -self.lx + T::from_count(i) * self.h
    }
    /// y coordinate of the horizontal face (or node row) `j`.
    pub fn yf(&self, j: usize) -> T {
        T::from_count(j) * self.h
    }
    pub fn extent(&self, loc: Loc) -> (usize, usize) {
        match loc {
            Loc::Cell => (self.nx, self.ny),
            Loc::XFace => (self.nx + 1, self.ny),
            Loc::YFace => (self.nx, self.ny + 1),
            Loc::Node => (self.nx + 1, self.ny + 1),
        }
    }
    /// Physical position of sample `(i, j)` at staggering `loc`.
    pub fn position(&self, loc: Loc, i: usize, j: usize) -> (T, T) {
        match loc {
            Loc::Cell => (self.xc(i), self.yc(j)),
            Loc::XFace => (self.xf(i), self.yc(j)),
            Loc::YFace => (self.xc(i), self.yf(j)),
            Loc::Node => (self.xf(i), self.yf(j)),
        }
    }
}

/// MAC staggering tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loc {
    /// Cell centers: density, pressure, effective viscous flux.
    Cell,
    /// Centers of vertical faces: first velocity component.
    XFace,
    /// Centers of horizontal faces: second velocity component.
    YFace,
    /// Cell corners: vorticity.
    Node,
}

impl Loc {
    /// True when samples in y sit on node rows (`y = j h`), so the wall row
    /// `y = 0` is part of the data.
    pub fn y_on_nodes(self) -> bool {
        matches!(self, Loc::YFace | Loc::Node)
    }
    pub fn x_on_nodes(self) -> bool {
        matches!(self, Loc::XFace | Loc::Node)
    }
}

/// Scalar samples on one staggering of a [`Grid`], row-major with `y` rows:
/// index `j * ni + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    loc: Loc,
    data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: Grid<T>, loc: Loc) -> Self {
        Self::constant(grid, loc, T::zero())
    }

    pub fn constant(grid: Grid<T>, loc: Loc, value: T) -> Self {
        let (ni, nj) = grid.extent(loc);
        Field { grid, loc, data: vec![value; ni * nj] }
    }

    pub fn from_fn<F: Fn(T, T) -> T>(grid: Grid<T>, loc: Loc, f: F) -> Self {
        let (ni, nj) = grid.extent(loc);
        let mut data = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in 0..ni {
                let (x, y) = grid.position(loc, i, j);
                data.push(f(x, y));
            }
        }
        Field { grid, loc, data }
    }

    pub fn from_vec(grid: Grid<T>, loc: Loc, data: Vec<T>) -> Result<Self> {
        let (ni, nj) = grid.extent(loc);
        if data.len() != ni * nj {
            return Err(Error::Incompatible(format!(
                "{loc:?} field on {}x{} grid needs {} samples, got {}",
                grid.nx(),
                grid.ny(),
                ni * nj,
                data.len()
            )));
        }
        Ok(Field { grid, loc, data })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn loc(&self) -> Loc {
        self.loc
    }
    pub fn ni(&self) -> usize {
        self.grid.extent(self.loc).0
    }
    pub fn nj(&self) -> usize {
        self.grid.extent(self.loc).1
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[j * self.ni() + i]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let ni = self.ni();
        self.data[j * ni + i] = v;
    }
    pub fn row(&self, j: usize) -> &[T] {
        let ni = self.ni();
        &self.data[j * ni..(j + 1) * ni]
    }
    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        let ni = self.ni();
        &mut self.data[j * ni..(j + 1) * ni]
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Field { grid: self.grid, loc: self.loc, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn min(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, &v| m.min(v))
    }
    pub fn max(&self) -> T {
        self.data.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }
    pub fn max_abs(&self) -> T {
        crate::sum::max_abs(&self.data)
    }
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_layout(&self, other: &Field<T>) -> bool {
        self.loc == other.loc && self.grid == other.grid
    }

    /// Quadrature weight of sample `(i, j)`: `h^2`, halved on every edge row
    /// or column that lies on a node line (trapezoidal rule).
    pub fn weight(&self, i: usize, j: usize) -> T {
        let mut w = self.grid.cell_area();
        if self.loc.x_on_nodes() && (i == 0 || i + 1 == self.ni()) {
            w *= T::half();
        }
        if self.loc.y_on_nodes() && (j == 0 || j + 1 == self.nj()) {
            w *= T::half();
        }
        w
    }

    /// Integral over the truncated domain.
    pub fn integral(&self) -> T {
        self.weighted_sum(|v| v)
    }

    /// `sum_k w_k f(v_k)` with pairwise row sums combined pairwise.
    pub fn weighted_sum<F: Fn(T) -> T + Copy>(&self, f: F) -> T {
        let nj = self.nj();
        let ni = self.ni();
        let mut rows = Vec::with_capacity(nj);
        for j in 0..nj {
            let row = self.row(j);
            let inner = if self.loc.x_on_nodes() {
                pairwise_map_sum(&row[1..ni - 1], f) + T::half() * (f(row[0]) + f(row[ni - 1]))
            } else {
                pairwise_map_sum(row, f)
            };
            let wy = if self.loc.y_on_nodes() && (j == 0 || j + 1 == nj) { T::half() } else { T::one() };
            rows.push(inner * wy);
        }
        pairwise_sum(&rows) * self.grid.cell_area()
    }

    /// Discrete `L^p` norm (`p = inf` gives the max norm).
    pub fn lp_norm(&self, p: T) -> T {
        if p.is_infinite() {
            return self.max_abs();
        }
        self.weighted_sum(|v| v.abs().powf(p)).powf(T::one() / p)
    }

    pub fn l2_norm(&self) -> T {
        self.weighted_sum(|v| v * v).sqrt()
    }
}
