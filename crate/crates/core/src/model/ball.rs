//! Mass carried by a half disk `B+_r = {|x| < r, x2 > 0}`.
//!
//! Each cell contributes its density times the exact area of its overlap
//! with the disk, so the measured mass is continuous and monotone in `r`.

use super::grid::{Field, Loc};
use crate::scalar::Real;
use crate::sum::pairwise_sum;

/// Antiderivative of `sqrt(r^2 - x^2)` on `[-r, r]`.
fn circle_primitive<T: Real>(x: T, r: T) -> T {
    let x = x.max(-r).min(r);
    let s = (r * r - x * x).max(T::zero()).sqrt();
    T::half() * (x * s + r * r * (x / r).asin())
}

/// Area of `[x0, x1] x [y0, y1]` (with `y0 >= 0`) inside the disk of radius
/// `r` centered at the origin.
pub fn rect_disk_area<T: Real>(x0: T, x1: T, y0: T, y1: T, r: T) -> T {
    if r <= T::zero() || x1 <= x0 || y1 <= y0 {
        return T::zero();
    }
    let near_x = if x0 > T::zero() { x0 } else if x1 < T::zero() { -x1 } else { T::zero() };
    if near_x * near_x + y0 * y0 >= r * r {
        return T::zero();
    }
    let far_x = x0.abs().max(x1.abs());
    if far_x * far_x + y1 * y1 <= r * r {
        return (x1 - x0) * (y1 - y0);
    }
    // split [x0, x1] where the circle crosses y0 and y1
    let mut cuts = vec![x0, x1];
    for y in [y0, y1] {
        if y < r {
            let c = (r * r - y * y).sqrt();
            for b in [-c, c] {
                if b > x0 && b < x1 {
                    cuts.push(b);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut area = T::zero();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = T::half() * (a + b);
        let s = (r * r - m * m).max(T::zero()).sqrt();
        if s <= y0 {
            continue;
        } else if s >= y1 {
            area += (b - a) * (y1 - y0);
        } else {
            area += circle_primitive(b, r) - circle_primitive(a, r) - y0 * (b - a);
        }
    }
    area
}

/// `int_{B+_r} rho dx` for a cell-centered density.
pub fn mass_in_halfball<T: Real>(rho: &Field<T>, r: T) -> T {
    debug_assert_eq!(rho.loc(), Loc::Cell);
    let g = *rho.grid();
    let h = g.h();
    let mut rows = Vec::with_capacity(g.ny());
    for j in 0..g.ny() {
        let (y0, y1) = (g.yf(j), g.yf(j + 1));
        if y0 >= r {
            break;
        }
        let mut terms = Vec::with_capacity(g.nx());
        for i in 0..g.nx() {
            let v = rho.at(i, j);
            if v != T::zero() {
                terms.push(v * rect_disk_area(g.xf(i), g.xf(i) + h, y0, y1, r));
            }
        }
        rows.push(pairwise_sum(&terms));
    }
    pairwise_sum(&rows)
}

/// Smallest radius whose half ball carries at least `target` mass, found by
/// bisection on the continuous mass profile. `None` when even the whole box
/// carries less.
pub fn smallest_radius_with_mass<T: Real>(rho: &Field<T>, target: T) -> Option<T> {
    let g = *rho.grid();
    let mut hi = (g.lx() * g.lx() + g.ly() * g.ly()).sqrt() * T::lit(1.0 + 1e-12);
    if mass_in_halfball(rho, hi) < target {
        return None;
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = T::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_in_halfball(rho, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::make_grid;

    /// Midpoint supersampling of a rectangle, independent of the exact path.
    fn sampled_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64, n: usize) -> f64 {
        let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
        let mut hits = 0usize;
        for a in 0..n {
            for b in 0..n {
                let x = x0 + (a as f64 + 0.5) * dx;
                let y = y0 + (b as f64 + 0.5) * dy;
                if x * x + y * y < r * r {
                    hits += 1;
                }
            }
        }
        hits as f64 * dx * dy
    }

    #[test]
    fn rect_area_matches_supersampling() {
        let cases = [
            (-0.3, 0.2, 0.0, 0.4, 0.35),
            (0.1, 0.6, 0.2, 0.7, 0.5),
            (-1.0, 1.0, 0.0, 1.0, 0.8),
            (-0.05, 0.05, 0.9, 1.0, 0.95),
        ];
        for (x0, x1, y0, y1, r) in cases {
            let exact = rect_disk_area(x0, x1, y0, y1, r);
            let approx = sampled_area(x0, x1, y0, y1, r, 2000);
            assert!((exact - approx).abs() < 2e-4 * (x1 - x0) * (y1 - y0) + 1e-9, "{exact} {approx}");
        }
        // whole half disk
        let half = rect_disk_area(-2.0, 2.0, 0.0, 2.0, 1.0);
        assert!((half - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn limits_of_ball_mass() {
        let g = make_grid(1.0f64, 1.0, 16, 8).unwrap();
        let rho = Field::from_fn(g, Loc::Cell, |x, y| 1.0 + x * x + y);
        let total = rho.integral();
        assert!((mass_in_halfball(&rho, 10.0) - total).abs() < 1e-13 * total);
        assert_eq!(mass_in_halfball(&rho, 0.0), 0.0);
        assert!(mass_in_halfball(&rho, 1e-9) < 1e-17);
        let r = smallest_radius_with_mass(&rho, 0.5 * total).unwrap();
        assert!((mass_in_halfball(&rho, r) - 0.5 * total).abs() < 1e-12);
    }
}
