use std::sync::Arc;

use super::*;
use crate::csolve::{apply_slip_bc, cfl_dt, step, StepperConfig};
use crate::model::{init_state, make_grid, make_params};
use proptest::prelude::*;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn h_by_quadrature(rho: f64, rf: f64, gamma: f64) -> f64 {
    rho * simpson(|s| (s.powf(gamma) - rf.powf(gamma)) / (s * s), rf, rho, 2000)
}

#[test]
fn potential_energy_examples() {
    assert_eq!(potential_energy_density(2.0, 0.0, 2.0).unwrap(), 4.0);
    assert_eq!(potential_energy_density(1.0, 1.0, 1.4).unwrap(), 0.0);
    let h: f64 = potential_energy_density(2.0, 1.0, 2.0).unwrap();
    assert!((h - 1.0).abs() < 1e-14);
    assert!((h_by_quadrature(2.0, 1.0, 2.0) - 1.0).abs() < 1e-10);
    assert!(potential_energy_density(-1.0, 1.0, 2.0).is_err());
}

#[test]
fn potential_energy_matches_quadrature_on_both_branches() {
    for &(rho, rf, gamma) in &[(0.3f64, 1.0f64, 1.4f64), (1.004, 1.0, 2.0), (0.999, 1.0, 3.0), (5.0, 0.5, 1.2), (0.0, 2.0, 1.6)] {
        let closed = potential_energy_density(rho, rf, gamma).unwrap();
        let quad = if rho == 0.0 { rf.powf(gamma) } else { h_by_quadrature(rho, rf, gamma) };
        assert!((closed - quad).abs() <= 1e-9 * quad.abs().max(1e-12), "{rho} {rf} {gamma}: {closed} vs {quad}");
    }
}

proptest! {
    #[test]
    fn potential_energy_is_comparable_to_squared_deviation(rf in 0.2f64..3.0, gamma in 1.05f64..3.0, k in 0usize..200) {
        let rho_hat = 3.0 * rf;
        let rho = rho_hat * k as f64 / 199.0;
        prop_assume!((rho - rf).abs() > 1e-9);
        let h = potential_energy_density(rho, rf, gamma).unwrap();
        prop_assert!(h >= 0.0);
        // H'' = P'(s)/s is bounded between its values at the ends of [0, rho_hat]
        let ratio = h / ((rho - rf) * (rho - rf));
        let lo = 0.5 * gamma * rho_hat.powf(gamma - 1.0) / rho_hat.max(1.0) * (rf / rho_hat).powf(1.0) * 1e-3;
        let hi = 0.5 * gamma * rho_hat.powf(gamma - 2.0).max(rf.powf(gamma - 2.0)) * 1e3 + 10.0;
        prop_assert!(ratio > lo && ratio < hi, "ratio {} outside ({}, {})", ratio, lo, hi);
    }

    #[test]
    fn potential_energy_nonnegative(rho in 0.0f64..10.0, rf in 0.0f64..3.0, gamma in 1.01f64..4.0) {
        prop_assert!(potential_energy_density(rho, rf, gamma).unwrap() >= 0.0);
    }
}

fn unit_weight() -> WeightSpec<f64> {
    WeightSpec::new(1.5).unwrap()
}

#[test]
fn equilibrium_record_is_quiet() {
    let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
    let p = make_params(1.0, 0.5, 1.4, 0.3, 0.8).unwrap();
    let (s, _) = init_state(g, |_, _| 0.8, |_, _| (0.0, 0.0), &p, false).unwrap();
    let mut s1 = s.clone();
    s1.t = 0.1;
    let r = sample(&s1, Some(&s), &p, &unit_weight(), &NormSpec::default()).unwrap();
    assert_eq!(r.energy, 0.0);
    assert_eq!(r.grad_u_l2, 0.0);
    assert!(r.grad_u_lp.iter().all(|q| q.1 == 0.0));
    assert_eq!(r.g_l2, 0.0);
    assert_eq!(r.omega_l2, 0.0);
    assert_eq!(r.sqrt_rho_udot_l2, Some(0.0));
    assert_eq!(r.sigma_t, 0.1);
    assert!((r.mass - 0.8 * 2.0).abs() < 1e-14);
}

#[test]
fn rigid_shear_has_constant_vorticity_and_no_flux() {
    let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let c = 0.7;
    let s = State { rho: Field::constant(g, Loc::Cell, 1.0), vel: Velocity::sample(g, |_, y| (c * y, 0.0)), t: 0.0 };
    let grad = VelocityGradient::of(&s.vel);
    let w = grad.vorticity();
    for j in 0..g.ny() {
        for i in 0..=g.nx() {
            assert!((w.at(i, j) + c).abs() < 1e-13, "({i}, {j}) {}", w.at(i, j));
        }
    }
    assert!(grad.divergence().max_abs() < 1e-13);
    assert!(effective_flux(&s, &p).max_abs() < 1e-13);
    let r = sample(&s, None, &p, &unit_weight(), &NormSpec::default()).unwrap();
    assert_eq!(r.sqrt_rho_udot_l2, None);
    assert_eq!(r.mass_ball, None);
}

/// Pseudo-random smooth fixture built from a few trigonometric modes.
fn fixture(nx: usize, ny: usize, seed: u64) -> (State<f64>, State<f64>, FluidParams<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = make_grid::<f64>(2.0, 2.0, nx, ny).unwrap();
    let p = make_params(1.0, 0.5, 1.4, 0.2, 0.5).unwrap();
    let rho = move |x: f64, y: f64| 0.5 + 0.3 * (1.0 + (k[0] * x + k[1] * y).sin()) * (-(x * x + y * y) / 2.0).exp();
    let u = move |x: f64, y: f64, t: f64| {
        let e = (-(x * x + (y - 1.0).powi(2))).exp();
        ((0.3 + t) * e * (1.0 + 0.5 * x), -0.2 * e * y * (1.0 + t))
    };
    let prev = State { rho: Field::from_fn(g, Loc::Cell, &rho), vel: Velocity::sample(g, |x, y| u(x, y, 0.0)), t: 0.4 };
    let mut vel = Velocity::sample(g, |x, y| u(x, y, 0.05));
    apply_slip_bc(&mut vel, p.cap_a());
    let mut pv = prev.vel.clone();
    apply_slip_bc(&mut pv, p.cap_a());
    let prev = State { vel: pv, ..prev };
    let s = State { rho: Field::from_fn(g, Loc::Cell, |x, y| rho(x, y) * 1.01), vel, t: 0.45 };
    (s, prev, p)
}

/// Direct loops over the raw arrays with explicit trapezoid weights.
struct Oracle<'a> {
    s: &'a State<f64>,
    h: f64,
    nx: usize,
    ny: usize,
}

impl Oracle<'_> {
    fn u(&self, i: usize, j: isize) -> f64 {
        if j < 0 {
            self.s.vel.wall_ghost[i]
        } else if j as usize == self.ny {
            -self.s.vel.u.data()[(self.ny - 1) * (self.nx + 1) + i]
        } else {
            self.s.vel.u.data()[j as usize * (self.nx + 1) + i]
        }
    }
    fn v(&self, i: isize, j: usize) -> f64 {
        if i < 0 {
            -self.s.vel.v.data()[j * self.nx]
        } else if i as usize == self.nx {
            -self.s.vel.v.data()[j * self.nx + self.nx - 1]
        } else {
            self.s.vel.v.data()[j * self.nx + i as usize]
        }
    }
    fn rho(&self, i: usize, j: usize) -> f64 {
        self.s.rho.data()[j * self.nx + i]
    }
    fn grad_sq(&self, i: usize, j: usize) -> f64 {
        let h = self.h;
        let a = (self.u(i + 1, j as isize) - self.u(i, j as isize)) / h;
        let b = (self.v(i as isize, j + 1) - self.v(i as isize, j)) / h;
        let mut c = 0.0;
        let mut d = 0.0;
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            c += 0.25 * (self.u(ni, nj as isize) - self.u(ni, nj as isize - 1)) / h;
            d += 0.25 * (self.v(ni as isize, nj) - self.v(ni as isize - 1, nj)) / h;
        }
        a * a + b * b + c * c + d * d
    }
}

#[test]
fn record_matches_direct_summation() {
    let (s, prev, p) = fixture(32, 16, 7);
    let ws = WeightSpec::new(2.0).unwrap();
    let r = sample(&s, Some(&prev), &p, &ws, &NormSpec { n1: Some(0.7), ..NormSpec::default() }).unwrap();
    let (nx, ny) = (32, 16);
    let g = *s.grid();
    let h = g.h();
    let o = Oracle { s: &s, h, nx, ny };
    let area = h * h;
    let (mut mass, mut hsum, mut g2, mut g3, mut div2, mut p2, mut p4, mut gg, mut mom) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            let rho = o.rho(i, j);
            mass += rho * area;
            let pf = 0.5f64.powf(1.4);
            hsum += area * rho * simpson(|q| (q.powf(1.4) - pf) / (q * q), 0.5, rho, 400);
            let gs = o.grad_sq(i, j);
            g2 += area * gs;
            g3 += area * gs.powf(1.5);
            let dv = (o.u(i + 1, j as isize) - o.u(i, j as isize) + o.v(i as isize, j + 1) - o.v(i as isize, j)) / h;
            div2 += area * dv * dv;
            let dp = rho.powf(1.4) - pf;
            p2 += area * dp * dp;
            p4 += area * dp.powi(4);
            let gf = 2.5 * dv - dp;
            gg += area * gf * gf;
            let (x, y) = (-2.0 + (i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let s2 = std::f64::consts::E + x * x + y * y;
            mom += area * rho * (s2.sqrt() * s2.ln().powi(2)).powi(2);
        }
    }
    let mut ke = 0.0;
    for j in 0..ny {
        for i in 0..=nx {
            let w = if i == 0 || i == nx { 0.5 } else { 1.0 } * area;
            let rf = if i == 0 { o.rho(0, j) } else if i == nx { o.rho(nx - 1, j) } else { 0.5 * (o.rho(i - 1, j) + o.rho(i, j)) };
            ke += 0.5 * w * rf * o.u(i, j as isize).powi(2);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let w = if j == 0 || j == ny { 0.5 } else { 1.0 } * area;
            let rf = if j == 0 { o.rho(i, 0) } else if j == ny { o.rho(i, ny - 1) } else { 0.5 * (o.rho(i, j - 1) + o.rho(i, j)) };
            ke += 0.5 * w * rf * o.v(i as isize, j).powi(2);
        }
    }
    let mut om = 0.0;
    for j in 0..=ny {
        for i in 0..=nx {
            let w = area * if i == 0 || i == nx { 0.5 } else { 1.0 } * if j == 0 || j == ny { 0.5 } else { 1.0 };
            let wv = (o.v(i as isize, j) - o.v(i as isize - 1, j) - o.u(i, j as isize) + o.u(i, j as isize - 1)) / h;
            om += w * wv * wv;
        }
    }
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * b.abs().max(1e-300);
    assert!(close(r.mass, mass, 1e-12));
    assert!(close(r.energy, ke + hsum, 1e-9), "{} vs {}", r.energy, ke + hsum);
    assert!(close(r.grad_u_l2, g2.sqrt(), 1e-12));
    assert!(close(r.grad_u_lp[1].1, g3.powf(1.0 / 3.0), 1e-12));
    assert!(close(r.div_u_l2, div2.sqrt(), 1e-12));
    assert!(close(r.p_lr[0].1, p2.sqrt(), 1e-12));
    assert!(close(r.p_lr[2].1, p4.powf(0.25), 1e-12));
    assert!(close(r.g_l2, gg.sqrt(), 1e-12));
    assert!(close(r.omega_l2, om.sqrt(), 1e-12));
    assert!(close(r.moment_a, mom, 1e-12));
    assert!(close(r.mass_ball.unwrap(), mass_in_halfball(&s.rho, 0.7 * 1.45), 1e-15));
    assert!(r.bc_res <= 1e-12);
    assert!(r.sqrt_rho_udot_l2.unwrap() > 0.0);
    assert!(r.rho_min >= 0.0 && r.rho_max >= r.rho_min);
}

#[test]
fn material_derivative_of_steady_uniform_flow_is_time_difference() {
    let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
    let u0 = Velocity::sample(g, |_, _| (0.3, 0.0));
    let u1 = Velocity::sample(g, |_, _| (0.5, 0.0));
    let rho = Field::constant(g, Loc::Cell, 1.0);
    let a = State { rho: rho.clone(), vel: u0, t: 0.0 };
    let b = State { rho, vel: u1, t: 0.1 };
    let (du, dv) = material_derivative(&b, &a).unwrap();
    assert!(du.data().iter().all(|&d| (d - 2.0).abs() < 1e-12));
    assert!(dv.max_abs() < 1e-14);
    assert!(material_derivative(&a, &b).is_err());
}

#[test]
fn wall_normal_material_derivative_vanishes_after_a_step() {
    let (s, _, p) = fixture(32, 16, 3);
    let cfg = StepperConfig::default();
    let dt = cfl_dt(&s, &p, s.grid(), &cfg).unwrap();
    let (s1, _) = step(&s, &p, &cfg, dt).unwrap();
    let (_, dv) = material_derivative(&s1, &s).unwrap();
    assert!(dv.row(0).iter().all(|&v| v == 0.0));
}

#[test]
fn half_ball_mass_limits() {
    let g = make_grid::<f64>(2.0, 2.0, 32, 16).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 0.0).unwrap();
    let (s, prof) = init_state(g, |x, y| (-(x * x + y * y) * 3.0).exp(), |_, _| (0.0, 0.0), &p, true).unwrap();
    assert!((mass_ball(&s, 10.0) - s.mass()).abs() <= 1e-14);
    assert!(mass_ball(&s, 1e-9) <= 1e-15);
    let n0 = prof.unwrap().n0;
    assert!(mass_ball(&s, n0) >= 0.5 - 1e-12);
}

#[test]
fn moment_examples() {
    let g = make_grid::<f64>(1.0, 1.0, 64, 32).unwrap();
    let zero = State { rho: Field::zeros(g, Loc::Cell), vel: Velocity::zeros(g), t: 0.0 };
    let ws = WeightSpec::new(1.5).unwrap();
    assert_eq!(weighted_moment(&zero, &ws), 0.0);
    let mut rho = Field::zeros(g, Loc::Cell);
    let m = 0.3;
    rho.set(32, 0, m / g.cell_area());
    let s = State { rho, ..zero };
    let h = g.h();
    let got = weighted_moment(&s, &ws);
    let want = m * 0.75f64.exp();
    assert!((got - want).abs() <= 2.0 * want * h * h, "{got} vs {want}");
}

#[test]
fn fit_power_recovers_synthetic_exponents() {
    let ts: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64).collect();
    let s = DecaySeries::new(ts.iter().map(|&t| (t, 7.0 * t.powf(-0.5))).collect(), (0.25, 10.0)).unwrap();
    let f = fit_power(&s).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12 && (f.amplitude - 7.0).abs() < 1e-10 && f.r2 == 1.0);
    let s = DecaySeries::whole(ts.iter().map(|&t| (t, 3.0 / t)).collect()).unwrap();
    assert!((fit_power(&s).unwrap().exponent + 1.0).abs() < 1e-12);
    let s = DecaySeries::whole(ts.iter().map(|&t| (t, t.powf(-0.5) * (1.0 + 0.01 * t.sin()))).collect()).unwrap();
    let f = fit_power(&s).unwrap();
    assert!((f.exponent + 0.5).abs() < 0.02);
    assert!(f.r2 > 0.0 && f.r2 <= 1.0);
}

#[test]
fn fit_power_rejects_bad_windows() {
    let pts: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, 1.0 / k as f64)).collect();
    assert!(fit_power(&DecaySeries::new(pts.clone(), (1.0, 4.0)).unwrap()).is_err());
    let mut neg = pts.clone();
    neg[5].1 = -1.0;
    assert!(fit_power(&DecaySeries::whole(neg).unwrap()).is_err());
    let mut back = pts;
    back.swap(2, 3);
    assert!(DecaySeries::whole(back).is_err());
}

proptest! {
    #[test]
    fn fit_power_exact_on_power_laws(alpha in -3.0f64..1.0, c in 0.01f64..100.0, t0 in 0.1f64..5.0) {
        let pts: Vec<(f64, f64)> = (0..12).map(|k| { let t = t0 * 1.3f64.powi(k); (t, c * t.powf(alpha)) }).collect();
        let f = fit_power(&DecaySeries::whole(pts).unwrap()).unwrap();
        prop_assert!((f.exponent - alpha).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&f.r2));
    }
}

fn case(y0: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'static, n0: f64, n1: f64, zeta_bar: f64) -> ZlotnikCase<f64> {
    ZlotnikCase { y0, g: Arc::new(g), n0, n1, zeta_bar }
}

#[test]
fn zlotnik_pure_decay_has_closed_form_slack() {
    let ts: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
    let y = DecaySeries::whole(ts.iter().map(|&t| (t, 5.0 * (-t).exp())).collect()).unwrap();
    let h = DecaySeries::whole(ts.iter().map(|&t| (t, 0.0)).collect()).unwrap();
    let out = zlotnik_check(&case(5.0, |z| -z, 0.0, 0.0, 0.0), &y, &h).unwrap();
    assert_eq!(out, ZlotnikOutcome::Holds { slack: 0.0 });
}

/// Classical RK4 for `y' = g(y) + h'(t)` with fine steps.
fn integrate(y0: f64, g: &dyn Fn(f64) -> f64, hp: &dyn Fn(f64) -> f64, t_end: f64, n: usize, every: usize) -> Vec<(f64, f64)> {
    let dt = t_end / n as f64;
    let f = |t: f64, y: f64| g(y) + hp(t);
    let mut y = y0;
    let mut out = vec![(0.0, y0)];
    for k in 0..n {
        let t = k as f64 * dt;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
        let k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
        let k4 = f(t + dt, y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (k + 1) % every == 0 {
            out.push(((k + 1) as f64 * dt, y));
        }
    }
    out
}

#[test]
fn zlotnik_oscillating_source_respects_bound() {
    let ys = integrate(1.0, &|y| -y, &|t: f64| t.cos() * 3.0, 20.0, 40_000, 100);
    let hs: Vec<(f64, f64)> = ys.iter().map(|&(t, _)| (t, 3.0 * t.sin())).collect();
    let c = case(1.0, |z| -z, 6.0, 0.0, 0.0);
    let out = zlotnik_check(&c, &DecaySeries::whole(ys).unwrap(), &DecaySeries::whole(hs).unwrap()).unwrap();
    assert!(out.passed(), "{out:?}");
}

#[test]
fn zlotnik_flags_unbounded_increments_as_hypothesis() {
    let ts: Vec<f64> = (0..50).map(|k| 0.2 * k as f64).collect();
    let y = DecaySeries::whole(ts.iter().map(|&t| (t, 1.0)).collect()).unwrap();
    let h = DecaySeries::whole(ts.iter().map(|&t| (t, t * t)).collect()).unwrap();
    let out = zlotnik_check(&case(1.0, |z| -z, 1.0, 1.0, 0.0), &y, &h).unwrap();
    assert!(matches!(out, ZlotnikOutcome::HypothesisFailed { .. }), "{out:?}");
    let out = zlotnik_check(&case(1.0, |z| 1.0 - z, 1.0, 0.0, 0.0), &y, &DecaySeries::whole(ts.iter().map(|&t| (t, 0.0)).collect()).unwrap()).unwrap();
    assert!(matches!(out, ZlotnikOutcome::HypothesisFailed { .. }));
}

#[test]
fn zlotnik_detects_a_bound_failure() {
    let ts: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let y = DecaySeries::whole(ts.iter().map(|&t| (t, 1.0 + t)).collect()).unwrap();
    let h = DecaySeries::whole(ts.iter().map(|&t| (t, 0.0)).collect()).unwrap();
    let out = zlotnik_check(&case(1.0, |z| -z, 0.5, 0.0, 0.0), &y, &h).unwrap();
    assert!(matches!(out, ZlotnikOutcome::BoundFailed { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn zlotnik_never_fails_on_consistent_data(
        a in 0.2f64..3.0, b in 0.0f64..0.5, c in -1.0f64..2.0, y0 in -2.0f64..4.0,
        amp in 0.0f64..2.0, w in 0.2f64..4.0, n1 in 0.0f64..0.5,
    ) {
        // g decreasing with g(zeta) <= -n1 for zeta >= zeta_bar = c + n1 / a
        let g = move |z: f64| -a * (z - c) - b * (z - c).powi(3);
        let hp = move |t: f64| amp * w * (w * t).cos() + n1;
        let ys = integrate(y0, &g, &hp, 10.0, 20_000, 50);
        let hs: Vec<(f64, f64)> = ys.iter().map(|&(t, _)| (t, amp * (w * t).sin() + n1 * t)).collect();
        let zc = case(y0, g, 2.0 * amp, n1, c + n1 / a);
        let out = zlotnik_check(&zc, &DecaySeries::whole(ys).unwrap(), &DecaySeries::whole(hs).unwrap()).unwrap();
        prop_assert!(out.passed(), "{:?}", out);
    }
}

#[test]
fn bc_residual_cases() {
    let g = make_grid::<f64>(1.0, 1.0, 32, 16).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let mut vel = Velocity::sample(g, |x, y| (y.cos() * (-x * x).exp(), 0.3 * y));
    let rho = Field::constant(g, Loc::Cell, 1.0);
    let raw = State { rho: rho.clone(), vel: vel.clone(), t: 0.0 };
    assert!(bc_residual(&raw, &p) <= g.h() * g.h());
    apply_slip_bc(&mut vel, 0.0);
    let mut s = State { rho, vel, t: 0.0 };
    assert!(bc_residual(&s, &p) <= 1e-12);
    s.vel.wall_ghost[7] += 0.5;
    assert!(bc_residual(&s, &p) > 1.0);
}

#[test]
fn edge_activity_separates_centered_and_edge_data() {
    let g = make_grid::<f64>(4.0, 4.0, 64, 32).unwrap();
    let mk = |cx: f64| {
        let mut vel = Velocity::sample(g, |x, y| (0.1 * (-((x - cx).powi(2) + (y - 1.0).powi(2)) * 4.0).exp(), 0.0));
        apply_slip_bc(&mut vel, 0.0);
        State { rho: Field::constant(g, Loc::Cell, 1.0), vel, t: 0.0 }
    };
    assert!(edge_activity(&mk(0.0), 2) < EDGE_ACTIVITY_LIMIT);
    assert!(edge_activity(&mk(3.5), 2) > 0.1);
}

#[test]
fn weighted_edge_activity_ignores_velocity_in_vacuum() {
    let g = make_grid::<f64>(4.0, 4.0, 64, 32).unwrap();
    let mut vel = Velocity::sample(g, |x, y| (0.1 * (-(x * x + (y - 1.0).powi(2)) * 0.05).exp(), 0.0));
    apply_slip_bc(&mut vel, 0.0);
    let rho = Field::from_fn(g, Loc::Cell, |x: f64, y: f64| (-(x * x + y * y) * 2.0).exp());
    let s = State { rho, vel, t: 0.0 };
    assert!(edge_activity(&s, 2) > 0.1);
    assert!(weighted_edge_activity(&s, 2) < EDGE_ACTIVITY_LIMIT);
    let flat = State { rho: Field::constant(g, Loc::Cell, 2.0), ..s.clone() };
    assert!((weighted_edge_activity(&flat, 2) - edge_activity(&flat, 2)).abs() < 1e-15);
}

#[test]
fn loglog_fit_accepts_short_sweeps() {
    let pts: Vec<(f64, f64)> = [50.0, 100.0, 200.0, 400.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
    let f = fit_loglog(&pts).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12 && (f.amplitude - 3.0).abs() < 1e-10 && f.r2 == 1.0);
    assert!(fit_loglog(&pts[..2]).is_err());
    assert!(fit_power(&DecaySeries::whole(pts).unwrap()).is_err());
}

#[test]
fn characteristic_residual_vanishes_at_equilibrium() {
    let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let (s, _) = init_state(g, |_, _| 1.0, |_, _| (0.0, 0.0), &p, false).unwrap();
    let traj: Vec<State<f64>> = (0..5).map(|k| State { t: 0.1 * k as f64, ..s.clone() }).collect();
    for src in [GSource::Definition, GSource::Neumann] {
        let tr = trace_density_characteristic(&traj, (0.1, 0.3), &p, src).unwrap();
        assert_eq!(tr.residual.len(), if src == GSource::Neumann { 3 } else { 4 });
        assert!(tr.max_abs() <= 1e-14, "{src:?}: {}", tr.max_abs());
        assert!(!tr.exited);
    }
}

#[test]
fn characteristic_residual_of_uniform_compression() {
    // rho(t) = exp(eps t) uniform, u = (-eps x1, 0): along every path
    // d rho / dt = eps rho = -rho div u.
    let eps = 0.2;
    let g = make_grid::<f64>(2.0, 2.0, 64, 32).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let traj: Vec<State<f64>> = (0..101)
        .map(|k| {
            let t = 0.01 * k as f64;
            State { rho: Field::constant(g, Loc::Cell, (eps * t).exp()), vel: Velocity::sample(g, |x, _| (-eps * x, 0.0)), t }
        })
        .collect();
    let tr = trace_density_characteristic(&traj, (1.0, 0.5), &p, GSource::Definition).unwrap();
    assert_eq!(tr.residual.len(), 100);
    assert!(tr.max_abs() <= 1e-3, "{}", tr.max_abs());
    let end = tr.path.last().unwrap().0;
    assert!((end - (-eps * 1.0f64).exp()).abs() < 1e-4, "{end}");
}

#[test]
fn characteristic_rejects_bad_input_and_flags_exit() {
    let g = make_grid::<f64>(1.0, 1.0, 16, 8).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let traj: Vec<State<f64>> = (0..6)
        .map(|k| State { rho: Field::constant(g, Loc::Cell, 1.0), vel: Velocity::sample(g, |_, _| (2.0, 0.0)), t: 0.2 * k as f64 })
        .collect();
    assert!(trace_density_characteristic(&traj[..2], (0.0, 0.5), &p, GSource::Definition).is_err());
    assert!(trace_density_characteristic(&traj, (3.0, 0.5), &p, GSource::Definition).is_err());
    let tr = trace_density_characteristic(&traj, (0.0, 0.5), &p, GSource::Definition).unwrap();
    assert!(tr.exited);
    assert!(tr.path.len() < traj.len());
}

/// Smooth data, monotone along both axes where the flow lives, so the
/// limiter stays inactive there.
fn smooth_start(n: usize, p: &FluidParams<f64>) -> State<f64> {
    let g = make_grid::<f64>(4.0, 4.0, 2 * n, n).unwrap();
    let (s, _) = init_state(
        g,
        |x, y| 1.0 + 0.05 * (x / 2.0).tanh() * (-(y * y) / 8.0).exp(),
        |x, y| {
            let e = (-(x * x + (y - 1.5).powi(2)) * 2.0).exp();
            (0.02 * e, 0.0)
        },
        p,
        false,
    )
    .unwrap();
    s
}

fn smooth_run(n: usize, steps: usize, dt: f64, p: &FluidParams<f64>) -> Vec<State<f64>> {
    let cfg = StepperConfig::default();
    let mut traj = vec![smooth_start(n, p)];
    for _ in 0..steps {
        let (s, _) = step(traj.last().unwrap(), p, &cfg, dt).unwrap();
        traj.push(s);
    }
    traj
}

#[test]
fn characteristic_residual_refines() {
    let p = make_params(1.0, 0.0, 1.4, 0.0, 1.0).unwrap();
    let mut errs = Vec::new();
    // dt small against h so that the spatial part of the residual dominates
    for (n, steps) in [(16usize, 80usize), (32, 160)] {
        let dt = 0.2 / steps as f64;
        let traj = smooth_run(n, steps, dt, &p);
        let tr = trace_density_characteristic(&traj, (0.3, 1.2), &p, GSource::Definition).unwrap();
        errs.push(tr.max_abs());
    }
    assert!(errs[0] / errs[1] >= 3.0, "{errs:?}");
}

#[test]
fn pressure_transport_cases() {
    let g = make_grid::<f64>(2.0, 2.0, 32, 16).unwrap();
    let p = make_params(1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
    let (s, _) = init_state(g, |_, _| 1.0, |_, _| (0.0, 0.0), &p, false).unwrap();
    let s1 = State { t: 0.1, ..s.clone() };
    assert_eq!(pressure_transport_residual(&s, &s1, &p).unwrap(), 0.0);
    assert!(pressure_transport_residual(&s1, &s, &p).is_err());

    let pv = make_params(1.0, 0.0, 2.0, 0.0, 0.0).unwrap();
    let rho = Field::from_fn(g, Loc::Cell, |x, _| if x > 0.0 { 1.0 } else { 0.0 });
    let vel = Velocity::sample(g, |x, y| ((3.0 * y).sin(), x.cos()));
    let a = State { rho: rho.clone(), vel: vel.clone(), t: 0.0 };
    let b = State { rho, vel, t: 0.1 };
    let f = pressure_transport_field(&a, &b, &pv).unwrap();
    for j in 0..16 {
        for i in 0..15 {
            assert_eq!(f.at(i, j), 0.0);
        }
    }
    assert!(f.max_abs() > 0.0);
}

#[test]
fn pressure_transport_residual_refines() {
    let p = make_params(1.0, 0.0, 1.4, 0.0, 1.0).unwrap();
    let cfg = StepperConfig::default();
    let mut errs = Vec::new();
    for n in [32usize, 64] {
        let s = smooth_start(n, &p);
        let dt = 0.004 * 32.0 / n as f64;
        let (s1, _) = step(&s, &p, &cfg, dt).unwrap();
        errs.push(pressure_transport_residual(&s, &s1, &p).unwrap());
    }
    assert!(errs[0] / errs[1] >= 3.0, "{errs:?}");
}

#[test]
fn neumann_flux_agrees_with_definition_after_a_step() {
    let p = make_params(1.0, 1.0, 1.4, 0.0, 1.0).unwrap();
    let cfg = StepperConfig::default();
    let mut errs = Vec::new();
    for n in [32usize, 64] {
        let g = make_grid::<f64>(4.0, 4.0, 2 * n, n).unwrap();
        let bump = |x: f64, y: f64, c: f64| (-2.0 * (x * x + (y - c).powi(2))).exp();
        let (s, _) = init_state(g, |x, y| 1.0 + 0.1 * bump(x, y, 1.0), |x, y| (0.05 * bump(x, y, 1.5), 0.0), &p, false).unwrap();
        let dt = 1e-4 * (32.0 / n as f64).powi(2);
        let (s1, _) = step(&s, &p, &cfg, dt).unwrap();
        let def = effective_flux(&s1, &p);
        let neu = trace::neumann_flux(&s1, &s).unwrap();
        let diff: Vec<f64> = def.data().iter().zip(neu.data()).map(|(a, b)| a - b).collect();
        let d = Field::from_vec(*def.grid(), Loc::Cell, diff).unwrap();
        errs.push(d.l2_norm() / def.l2_norm());
    }
    // convection enters the step at the old level and u_dot at the new one,
    // so the two differ by O(dt) on top of the spatial error
    assert!(errs.iter().all(|&e| e < 1e-4), "{errs:?}");
}


