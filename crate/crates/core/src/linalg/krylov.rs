//! Preconditioned conjugate gradients on flat vectors.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sum::{max_abs, pairwise_dot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop<T> {
    /// `||r||_2 <= tol * ||b||_2`.
    Relative(T),
    /// `max |r_i| <= tol`.
    MaxAbs(T),
}

#[derive(Debug, Clone, Copy)]
pub struct PcgReport<T> {
    pub iterations: usize,
    pub residual: T,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A`, starting from
/// the contents of `x`.
///
/// `project`, when given, is applied to residual-like vectors so that a
/// singular operator is solved on the complement of its kernel.
pub fn pcg<T, A, M>(
    solver: &'static str,
    apply: A,
    precond: M,
    project: Option<&dyn Fn(&mut [T])>,
    b: &[T],
    x: &mut [T],
    stop: Stop<T>,
    maxit: usize,
) -> Result<PcgReport<T>>
where
    T: Real,
    A: Fn(&[T], &mut [T]),
    M: Fn(&[T], &mut [T]),
{
    let n = b.len();
    let mut r = vec![T::zero(); n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if let Some(p) = project {
        p(&mut r);
    }
    let bnorm = pairwise_dot(b, b).sqrt();
    let measure = |r: &[T]| match stop {
        Stop::Relative(_) => pairwise_dot(r, r).sqrt(),
        Stop::MaxAbs(_) => max_abs(r),
    };
    let target = match stop {
        Stop::Relative(tol) => tol * bnorm,
        Stop::MaxAbs(tol) => tol,
    };
    let mut res = measure(&r);
    if !res.is_finite() {
        return Err(Error::NonFinite(format!("{solver}: initial residual")));
    }
    if res <= target {
        return Ok(PcgReport { iterations: 0, residual: res });
    }
    let mut z = vec![T::zero(); n];
    precond(&r, &mut z);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = pairwise_dot(&r, &z);
    for it in 1..=maxit {
        apply(&p, &mut ap);
        let pap = pairwise_dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::NonConvergence { solver, iterations: it, residual: res.as_f64() });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(pr) = project {
            pr(&mut r);
        }
        res = measure(&r);
        if !res.is_finite() {
            return Err(Error::NonFinite(format!("{solver}: residual at iteration {it}")));
        }
        if res <= target {
            return Ok(PcgReport { iterations: it, residual: res });
        }
        precond(&r, &mut z);
        if let Some(pr) = project {
            pr(&mut z);
        }
        let rz_new = pairwise_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence { solver, iterations: maxit, residual: res.as_f64() })
}

/// Subtracts the arithmetic mean.
pub fn remove_mean<T: Real>(v: &mut [T]) {
    let m = crate::sum::pairwise_sum(v) / T::from_count(v.len());
    v.iter_mut().for_each(|x| *x -= m);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap1d(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - l - r;
        }
    }

    #[test]
    fn solves_dirichlet_chain() {
        let n = 40;
        let xe: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        lap1d(&xe, &mut b);
        let mut x = vec![0.0; n];
        let rep = pcg("test", lap1d, |r, z| z.copy_from_slice(r), None, &b, &mut x, Stop::Relative(1e-13), 200).unwrap();
        assert!(rep.iterations <= n + 1);
        for (a, e) in x.iter().zip(&xe) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_nonconvergence() {
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let err = pcg("chain", lap1d, |r, z| z.copy_from_slice(r), None, &b, &mut x, Stop::Relative(1e-14), 3);
        assert!(matches!(err, Err(Error::NonConvergence { solver: "chain", iterations: 3, .. })));
    }
}
