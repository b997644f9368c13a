//! Separable trigonometric transforms used to invert constant-coefficient
//! stencils exactly.

use std::sync::Arc;

use rustdct::rustfft::num_complex::Complex;
use rustdct::rustfft::{Fft, FftPlanner};
use rustdct::{DctPlanner, Dst1, TransformType2And3};

use crate::scalar::Real;

/// Eigenbasis of a 1D second-difference operator.
#[derive(Clone)]
pub enum Line<T: Real> {
    /// `cos(pi k (m + 1/2) / n)`: cell-centered data with mirror ghosts at both
    /// ends (homogeneous Neumann).
    CosHalf { n: usize, plan: Arc<dyn TransformType2And3<T>> },
    /// `sin(pi (k + 1) (m + 1) / (n + 1))`: interior node data with zero
    /// values pinned just outside both ends (homogeneous Dirichlet).
    Sine { n: usize, plan: Arc<dyn Dst1<T>> },
}

impl<T: Real> Line<T> {
    pub fn cos_half(planner: &mut DctPlanner<T>, n: usize) -> Self {
        Line::CosHalf { n, plan: planner.plan_dct2(n) }
    }

    pub fn sine(planner: &mut DctPlanner<T>, n: usize) -> Self {
        Line::Sine { n, plan: planner.plan_dst1(n) }
    }

    pub fn len(&self) -> usize {
        match self {
            Line::CosHalf { n, .. } | Line::Sine { n, .. } => *n,
        }
    }

    /// `sum_m phi_k(m)^2`.
    pub fn norm2(&self, k: usize) -> T {
        match self {
            Line::CosHalf { n, .. } => {
                if k == 0 {
                    T::from_count(*n)
                } else {
                    T::from_count(*n) * T::half()
                }
            }
            Line::Sine { n, .. } => T::from_count(*n + 1) * T::half(),
        }
    }

    /// `2 sin(theta_k / 2)`: the unit-spacing second difference has
    /// eigenvalue `-symbol(k)^2` on mode `k`.
    pub fn symbol(&self, k: usize) -> T {
        let pi = T::lit(std::f64::consts::PI);
        match self {
            Line::CosHalf { n, .. } => T::two() * (pi * T::from_count(k) / T::from_count(2 * n)).sin(),
            Line::Sine { n, .. } => T::two() * (pi * T::from_count(k + 1) / T::from_count(2 * (n + 1))).sin(),
        }
    }

    /// Coefficients `sum_m x_m phi_k(m)`.
    pub fn analysis(&self, buf: &mut [T]) {
        match self {
            Line::CosHalf { plan, .. } => plan.process_dct2(buf),
            Line::Sine { plan, .. } => plan.process_dst1(buf),
        }
    }

    /// Values `sum_k c_k phi_k(m)`.
    pub fn synthesis(&self, buf: &mut [T]) {
        match self {
            Line::CosHalf { plan, .. } => {
                buf[0] *= T::two();
                plan.process_dct3(buf);
            }
            Line::Sine { plan, .. } => plan.process_dst1(buf),
        }
    }
}

/// Tensor-product transform over row-major `ni x nj` data (x fastest).
#[derive(Clone)]
pub struct Separable<T: Real> {
    pub x: Line<T>,
    pub y: Line<T>,
}

impl<T: Real> Separable<T> {
    fn along_x(&self, data: &mut [T], synth: bool) {
        let ni = self.x.len();
        for row in data.chunks_mut(ni) {
            if synth {
                self.x.synthesis(row)
            } else {
                self.x.analysis(row)
            }
        }
    }

    fn along_y(&self, data: &mut [T], synth: bool) {
        let ni = self.x.len();
        let nj = self.y.len();
        let mut col = vec![T::zero(); nj];
        for i in 0..ni {
            for j in 0..nj {
                col[j] = data[j * ni + i];
            }
            if synth {
                self.y.synthesis(&mut col)
            } else {
                self.y.analysis(&mut col)
            }
            for j in 0..nj {
                data[j * ni + i] = col[j];
            }
        }
    }

    pub fn analysis(&self, data: &mut [T]) {
        debug_assert_eq!(data.len(), self.x.len() * self.y.len());
        self.along_x(data, false);
        self.along_y(data, false);
    }

    pub fn synthesis(&self, data: &mut [T]) {
        self.along_y(data, true);
        self.along_x(data, true);
    }

    pub fn norm2(&self, k: usize, l: usize) -> T {
        self.x.norm2(k) * self.y.norm2(l)
    }
}

/// Small sizes whose prime factors are all in {2, 3, 5, 7}.
pub fn transform_friendly(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    for p in [2, 3, 5, 7] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}

/// Exact inverse of the periodic 5-point Laplacian on an `ni x nj` box with
/// spacing `h`, zero-mean normalized.
pub struct PeriodicPoisson<T: Real> {
    ni: usize,
    nj: usize,
    h: T,
    fx: Arc<dyn Fft<T>>,
    fy: Arc<dyn Fft<T>>,
    bx: Arc<dyn Fft<T>>,
    by: Arc<dyn Fft<T>>,
}

impl<T: Real> PeriodicPoisson<T> {
    pub fn new(ni: usize, nj: usize, h: T) -> Self {
        let mut p = FftPlanner::new();
        PeriodicPoisson {
            ni,
            nj,
            h,
            fx: p.plan_fft_forward(ni),
            fy: p.plan_fft_forward(nj),
            bx: p.plan_fft_inverse(ni),
            by: p.plan_fft_inverse(nj),
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let (ni, nj) = (self.ni, self.nj);
        let mut buf: Vec<Complex<T>> = rhs.iter().map(|&r| Complex::new(r, T::zero())).collect();
        for row in buf.chunks_mut(ni) {
            self.fx.process(row);
        }
        let mut col = vec![Complex::new(T::zero(), T::zero()); nj];
        let pi = T::lit(std::f64::consts::PI);
        let inv_h2 = T::one() / (self.h * self.h);
        for i in 0..ni {
            for j in 0..nj {
                col[j] = buf[j * ni + i];
            }
            self.fy.process(&mut col);
            let sx = (pi * T::from_count(i) / T::from_count(ni)).sin();
            for (l, c) in col.iter_mut().enumerate() {
                let sy = (pi * T::from_count(l) / T::from_count(nj)).sin();
                let lam = -T::lit(4.0) * (sx * sx + sy * sy) * inv_h2;
                *c = if i == 0 && l == 0 { Complex::new(T::zero(), T::zero()) } else { *c / lam };
            }
            self.by.process(&mut col);
            for j in 0..nj {
                buf[j * ni + i] = col[j];
            }
        }
        for row in buf.chunks_mut(ni) {
            self.bx.process(row);
        }
        let scale = T::one() / T::from_count(ni * nj);
        buf.iter().map(|c| c.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(basis: &str, n: usize, k: usize, m: usize) -> f64 {
        let pi = std::f64::consts::PI;
        match basis {
            "cos" => (pi * k as f64 * (m as f64 + 0.5) / n as f64).cos(),
            _ => (pi * (k + 1) as f64 * (m + 1) as f64 / (n + 1) as f64).sin(),
        }
    }

    #[test]
    fn line_conventions_match_naive_sums() {
        let mut planner = DctPlanner::new();
        for n in [5usize, 8, 12] {
            for (name, line) in [("cos", Line::cos_half(&mut planner, n)), ("sin", Line::sine(&mut planner, n))] {
                let x: Vec<f64> = (0..n).map(|m| ((m * 7 + 3) % 11) as f64 - 4.0).collect();
                let mut a = x.clone();
                line.analysis(&mut a);
                for k in 0..n {
                    let e: f64 = (0..n).map(|m| x[m] * naive(name, n, k, m)).sum();
                    assert!((a[k] - e).abs() < 1e-12, "{name} analysis n={n} k={k}");
                    let nrm: f64 = (0..n).map(|m| naive(name, n, k, m).powi(2)).sum();
                    assert!((line.norm2(k) - nrm).abs() < 1e-12);
                }
                let mut s = x.clone();
                line.synthesis(&mut s);
                for m in 0..n {
                    let e: f64 = (0..n).map(|k| x[k] * naive(name, n, k, m)).sum();
                    assert!((s[m] - e).abs() < 1e-12, "{name} synthesis n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn periodic_poisson_inverts_stencil() {
        let (ni, nj, h) = (12usize, 10usize, 0.3f64);
        let mut phi: Vec<f64> = (0..ni * nj).map(|k| ((k * 37 % 17) as f64).sin()).collect();
        let mean = phi.iter().sum::<f64>() / phi.len() as f64;
        phi.iter_mut().for_each(|v| *v -= mean);
        let mut lap = vec![0.0; ni * nj];
        for j in 0..nj {
            for i in 0..ni {
                let c = phi[j * ni + i];
                let e = phi[j * ni + (i + 1) % ni];
                let w = phi[j * ni + (i + ni - 1) % ni];
                let n = phi[((j + 1) % nj) * ni + i];
                let s = phi[((j + nj - 1) % nj) * ni + i];
                lap[j * ni + i] = (e + w + n + s - 4.0 * c) / (h * h);
            }
        }
        let sol = PeriodicPoisson::new(ni, nj, h).solve(&lap);
        for (a, b) in sol.iter().zip(&phi) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn friendly_sizes() {
        assert!(transform_friendly(128));
        assert!(transform_friendly(210));
        assert!(!transform_friendly(22));
        assert!(!transform_friendly(0));
    }
}
