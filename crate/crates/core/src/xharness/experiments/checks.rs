use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csolve::{step, StepperConfig};
use crate::diag::{trace_density_characteristic, zlotnik_check, DecaySeries, GSource, ZlotnikCase, ZlotnikOutcome};
use crate::error::{Error, Result};
use crate::model::{init_state, make_grid, make_params, Field, Loc};
use crate::reflect::{even_extend, gradient_energy, odd_extend, solve_g_neumann, Parity};
use crate::State;

use super::super::artifacts::{write_atomic, RunDir};
use super::super::config::ExperimentConfig;
use super::super::criteria::get;
use super::Report;

fn write_csv(dir: &RunDir, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let err = |e: csv::Error| Error::Series(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Series(e.to_string()))?;
    write_atomic(&dir.join("series.csv"), &bytes)
}

fn l2_diff(a: &Field<f64>, b: &Field<f64>) -> Result<f64> {
    let d = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    Ok(Field::from_vec(*a.grid(), a.loc(), d)?.l2_norm())
}

pub(super) fn reflection_unit(cfg: &ExperimentConfig, dir: &RunDir, report: &mut Report) -> Result<()> {
    let gs = cfg.grid;
    let g = make_grid(gs.lx, gs.ly, gs.nx, gs.ny)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let locs = [Loc::Cell, Loc::XFace, Loc::YFace, Loc::Node];
    for k in 0..cfg.cases {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loc = locs[k % locs.len()];
        let odd = loc == Loc::YFace || (k / locs.len()) % 2 == 1;
        let (lx, ly) = (gs.lx, gs.ly);
        let f = Field::from_fn(g, loc, |x, y| {
            let (x, y) = (x / lx, y / ly);
            let base = c[0] + c[1] * x + c[2] * (3.0 * x + c[3]).sin() * (2.0 * y).cos() + c[4] * y * y + c[5] * (x * y).sin();
            if odd && loc.y_on_nodes() {
                y * base
            } else {
                base
            }
        });
        let (w, p) = if odd { (odd_extend(&f)?, Parity::Odd) } else { (even_extend(&f)?, Parity::Even) };
        let half = gradient_energy(&f, p);
        if !(half > 0.0) {
            return Err(Error::Degenerate(format!("case {k}: zero half-plane gradient energy")));
        }
        let dev = (w.gradient_energy() / half - 2.0).abs();
        worst = worst.max(dev);
        rows.push(vec!["energy_ratio".into(), k.to_string(), format!("{loc:?}"), format!("{dev:.16e}")]);
    }
    let tol = get("reflection.energy_ratio_tol");
    report.num("energy_ratio_max_deviation", worst);
    report.verdict("energy_identity", worst <= tol, format!("max |E_ext/E_half - 2| = {worst:.3e} over {} fields (need <= {tol:e})", cfg.cases));

    let mut errs = Vec::new();
    for level in 0..cfg.levels {
        let m = 1usize << level;
        let g = make_grid(gs.lx, gs.ly, gs.nx * m, gs.ny * m)?;
        let (a, b) = (PI / gs.lx, PI / gs.ly);
        let gx = |x: f64, y: f64| -a * (a * x).sin() * (b * y).cos() - a * (2.0 * a * x).sin() * (3.0 * b * y).cos();
        let gy = |x: f64, y: f64| -b * (a * x).cos() * (b * y).sin() - 1.5 * b * (2.0 * a * x).cos() * (3.0 * b * y).sin();
        let sol = solve_g_neumann(&Field::from_fn(g, Loc::XFace, gx), &Field::from_fn(g, Loc::YFace, gy), &g)?;
        let mut exact = Field::from_fn(g, Loc::Cell, |x, y| (a * x).cos() * (b * y).cos() + 0.5 * (2.0 * a * x).cos() * (3.0 * b * y).cos());
        let mean = exact.integral() / (2.0 * gs.lx * gs.ly);
        for v in exact.data_mut() {
            *v -= mean;
        }
        let e = l2_diff(&sol, &exact)?;
        rows.push(vec!["neumann_error".into(), level.to_string(), format!("{}x{}", g.nx(), g.ny()), format!("{e:.16e}")]);
        report.num(format!("neumann_error.{}x{}", g.nx(), g.ny()), e);
        errs.push(e);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let (lo, hi) = (get("reflection.order_ratio_lo"), get("reflection.order_ratio_hi"));
    for (k, r) in ratios.iter().enumerate() {
        report.num(format!("neumann_ratio.{k}"), *r);
    }
    report.verdict("neumann_order", ratios.iter().all(|r| (lo..=hi).contains(r)), format!("error ratios {ratios:?} (need each in [{lo}, {hi}])"));
    write_csv(dir, &["check", "case", "layout", "value"], &rows)
}

pub(super) fn mms_convergence(cfg: &ExperimentConfig, dir: &RunDir, report: &mut Report) -> Result<()> {
    let (mu, lambda, gamma) = (cfg.params.mu, cfg.params.lambda, cfg.params.gamma);
    let params = make_params(mu, lambda, gamma, 0.0, 1.0)?;
    let scfg = StepperConfig {
        forcing: Some(Arc::new(move |_, y: f64, t: f64| ((mu - 1.0) * y.cos() * (-t).exp(), 0.0))),
        edge_velocity: Some(Arc::new(|_, y: f64, t: f64| (y.cos() * (-t).exp(), 0.0))),
        ..StepperConfig::default()
    };
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for level in 0..cfg.levels {
        let m = 1usize << level;
        let g = make_grid(cfg.grid.lx, cfg.grid.ly, cfg.grid.nx * m, cfg.grid.ny * m)?;
        let (mut s, _) = init_state(g, |_, _| 1.0, |_, y: f64| (y.cos(), 0.0), &params, false)?;
        let h = g.h();
        let steps = (cfg.t_end / (cfg.dt_h2 * h * h)).ceil() as usize;
        let dt = cfg.t_end / steps as f64;
        for _ in 0..steps {
            s = step(&s, &params, &scfg, dt)?.0;
        }
        let decay = (-cfg.t_end).exp();
        let eu = l2_diff(&s.vel.u, &Field::from_fn(g, Loc::XFace, |_, y: f64| y.cos() * decay))?;
        let ev = s.vel.v.l2_norm();
        let e = (eu * eu + ev * ev).sqrt();
        errs.push(e);
        let order = if level > 0 { (errs[level - 1] / e).log2() } else { f64::NAN };
        report.num(format!("error.{}x{}", g.nx(), g.ny()), e);
        rows.push(vec![level.to_string(), g.nx().to_string(), g.ny().to_string(), format!("{h:.16e}"), steps.to_string(), format!("{e:.16e}"), format!("{order:.6}")]);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let need = get("mms.min_order");
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    report.num("min_order", worst);
    report.verdict("spatial_order", worst >= need, format!("observed orders {orders:?} (need >= {need})"));
    write_csv(dir, &["level", "nx", "ny", "h", "steps", "error", "order"], &rows)
}

/// Classical RK4 for `y' = g(y) + h'(t)`, sampled every `every` steps.
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

fn characteristic_run(cfg: &ExperimentConfig, level: usize) -> Result<f64> {
    let p = make_params(1.0, 0.0, 1.4, 0.0, 1.0)?;
    let m = 1usize << level;
    let g = make_grid(cfg.grid.lx, cfg.grid.ly, cfg.grid.nx * m, cfg.grid.ny * m)?;
    let (s, _) = init_state(
        g,
        |x: f64, y: f64| 1.0 + 0.05 * (x / 2.0).tanh() * (-(y * y) / 8.0).exp(),
        |x: f64, y: f64| (0.02 * (-(x * x + (y - 1.5).powi(2)) * 2.0).exp(), 0.0),
        &p,
        false,
    )?;
    let steps = (cfg.t_end / (g.h() / 100.0)).ceil() as usize;
    let dt = cfg.t_end / steps as f64;
    let scfg = StepperConfig::default();
    let mut traj: Vec<State> = vec![s];
    for _ in 0..steps {
        let next = step(traj.last().expect("nonempty"), &p, &scfg, dt)?.0;
        traj.push(next);
    }
    let x0 = (0.075 * cfg.grid.lx, 0.3 * cfg.grid.ly);
    Ok(trace_density_characteristic(&traj, x0, &p, GSource::Definition)?.max_abs())
}

pub(super) fn zlotnik_suite(cfg: &ExperimentConfig, dir: &RunDir, report: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let (mut verified, mut held, mut flagged) = (0usize, 0usize, 0usize);
    let mut violations = Vec::new();
    for k in 0..cfg.cases {
        let a = rng.gen_range(0.2..3.0);
        let b = rng.gen_range(0.0..0.5);
        let c = rng.gen_range(-1.0..2.0);
        let y0 = rng.gen_range(-2.0..4.0);
        let amp = rng.gen_range(0.0..2.0);
        let w = rng.gen_range(0.2..4.0);
        let n1 = rng.gen_range(0.0..0.5);
        let understate = k % 4 == 3;
        let g = move |z: f64| -a * (z - c) - b * (z - c).powi(3);
        let hp = move |t: f64| amp * w * (w * t).cos() + n1;
        let ys = integrate(y0, &g, &hp, 10.0, 20_000, 50);
        let hs: Vec<(f64, f64)> = ys.iter().map(|&(t, _)| (t, amp * (w * t).sin() + n1 * t)).collect();
        let n0 = if understate { 0.25 * amp } else { 2.0 * amp };
        let case = ZlotnikCase { y0, g: Arc::new(g), n0, n1, zeta_bar: c + n1 / a };
        let out = zlotnik_check(&case, &DecaySeries::whole(ys)?, &DecaySeries::whole(hs)?)?;
        let (tag, slack) = match &out {
            ZlotnikOutcome::Holds { slack } => {
                verified += 1;
                held += 1;
                ("holds", *slack)
            }
            ZlotnikOutcome::BoundFailed { slack, .. } => {
                verified += 1;
                violations.push(k);
                ("bound_failed", *slack)
            }
            ZlotnikOutcome::HypothesisFailed { .. } => {
                flagged += 1;
                ("hypothesis_failed", f64::NAN)
            }
        };
        rows.push(vec![k.to_string(), format!("{y0:?}"), format!("{n0:?}"), format!("{n1:?}"), format!("{:?}", case.zeta_bar), tag.into(), format!("{slack:.6e}")]);
    }
    report.metric("cases", cfg.cases);
    report.metric("hypotheses_verified", verified);
    report.metric("hypotheses_flagged", flagged);
    report.verdict(
        "comparison_bound",
        verified > 0 && held == verified,
        format!("{held} of {verified} cases with verified hypotheses respect the bound; violations at {violations:?}"),
    );

    let coarse = characteristic_run(cfg, 0)?;
    let fine = characteristic_run(cfg, 1)?;
    let ratio = coarse / fine;
    report.num("characteristic_residual.coarse", coarse);
    report.num("characteristic_residual.fine", fine);
    report.num("characteristic_ratio", ratio);
    let need = get("zlotnik.refinement_ratio");
    report.verdict("characteristic_refinement", ratio >= need, format!("residual ratio {ratio:.3} under (h, dt) halving (need >= {need})"));
    write_csv(dir, &["case", "y0", "n0", "n1", "zeta_bar", "outcome", "slack"], &rows)
}
