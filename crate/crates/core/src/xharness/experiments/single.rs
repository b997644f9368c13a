use std::path::Path;

use crate::csolve::run;
use crate::diag::{fit_power, DecaySeries, NormSpec, PowerFit};
use crate::error::{Error, Result};
use crate::model::{smallest_radius_with_mass, WeightSpec};
use crate::store::Checkpoint;
use crate::{FluidParams, State};

use super::super::artifacts::RunDir;
use super::super::config::ExperimentConfig;
use super::super::criteria::get;
use super::super::presets;
use super::{check_compatible, fluid_params, grid_of, stepper, value_at, Recorder, Report, Trajectory};

pub(crate) fn norms(n1: Option<f64>) -> NormSpec<f64> {
    NormSpec { p: vec![3.0, 4.0], r: vec![2.0, 3.0, 4.0], n1 }
}

/// Integrates from `s0` (or from the checkpoint) to `t_end`, writing the
/// series and monitor tables into `out`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate(
    cfg: &ExperimentConfig,
    params: &FluidParams,
    s0: State,
    resume: Option<Checkpoint>,
    norms: NormSpec<f64>,
    wspec: WeightSpec<f64>,
    out: &Path,
    ckpt_dir: &Path,
) -> Result<State> {
    let scfg = stepper(cfg);
    let (start, restart) = match resume {
        Some(ck) => {
            check_compatible(&ck, s0.grid(), params)?;
            let t = ck.state.t;
            (ck.state, Some(t))
        }
        None => (s0, None),
    };
    let mut rec = Recorder::open(out, ckpt_dir, *params, wspec, norms, cfg.checkpoint_every, scfg.rho_floor, restart)?;
    let fin = run(start, params, &scfg, cfg.t_end, cfg.sample_every, &mut rec)?;
    rec.finish(&fin)?;
    Ok(fin)
}

fn mass_drift(tr: &Trajectory) -> Result<f64> {
    let m = tr.pairs("mass")?;
    let m0 = m.first().ok_or_else(|| Error::Series("empty series".into()))?.1;
    Ok(m.iter().fold(0.0f64, |a, &(_, v)| a.max(((v - m0) / m0).abs())))
}

/// Largest energy increase per unit time between consecutive samples,
/// relative to `E(0)`; zero for a non-increasing energy.
fn energy_rise(tr: &Trajectory) -> Result<f64> {
    let e = tr.pairs("energy")?;
    let e0 = e.first().ok_or_else(|| Error::Series("empty series".into()))?.1;
    Ok(e.windows(2).fold(0.0f64, |a, w| a.max((w[1].1 - w[0].1) / (w[1].0 - w[0].0) / e0)))
}

fn fit(tr: &Trajectory, col: &str, window: (f64, f64)) -> Result<PowerFit<f64>> {
    let pts: Vec<(f64, f64)> = tr.pairs(col)?.into_iter().filter(|p| p.0 > 0.0).collect();
    fit_power(&DecaySeries::new(pts, window)?)
}

/// First sample time at which the monitor column exceeds the flag level.
fn first_flag(tr: &Trajectory, col: &str) -> Option<f64> {
    let limit = get("decay.edge_activity");
    tr.monitor_pairs(col).into_iter().find(|p| p.1 > limit).map(|p| p.0)
}

pub(super) fn vacuum_decay(cfg: &ExperimentConfig, dir: &RunDir, resume: Option<Checkpoint>, report: &mut Report) -> Result<()> {
    let params = fluid_params(cfg)?;
    let (s0, profile) = presets::build(&cfg.ic, grid_of(cfg)?, &params)?;
    let profile = profile.ok_or_else(|| Error::Params("vacuum_decay needs rho_far = 0".into()))?;
    let n1 = smallest_radius_with_mass(&s0.rho, 0.25 * profile.total_mass)
        .ok_or_else(|| Error::State("cannot locate the quarter-mass radius".into()))?;
    report.num("n0", profile.n0);
    report.num("n1", n1);
    let wspec = WeightSpec::new(cfg.moment_a)?;
    integrate(cfg, &params, s0, resume, norms(Some(n1)), wspec, dir.root(), &dir.join("checkpoints"))?;
    let tr = Trajectory::load(dir.root())?;

    let drift = mass_drift(&tr)?;
    report.num("mass_drift", drift);
    report.verdict("mass_drift", drift <= get("conservation.mass_drift"), format!("max relative mass drift {drift:.3e}"));
    let rise = energy_rise(&tr)?;
    report.num("energy_rise_rate", rise);
    report.verdict("energy_monotone", rise <= get("conservation.energy_rise_rate"), format!("largest relative energy rise per unit time {rise:.3e}"));

    let times: Vec<f64> = tr.pairs("t")?.into_iter().map(|p| p.0).collect();
    let flag = first_flag(&tr, "weighted_edge_activity");
    let raw_flag = first_flag(&tr, "edge_activity");
    report.metric("edge_flag_t", flag.map_or("none".into(), |t| format!("{t:?}")));
    report.metric("edge_flag_t_unweighted", raw_flag.map_or("none".into(), |t| format!("{t:?}")));
    let hi = match flag {
        Some(tf) => times.iter().copied().filter(|&t| t < tf).fold(f64::NEG_INFINITY, f64::max).min(cfg.fit_window.1),
        None => cfg.fit_window.1,
    };
    let window = (cfg.fit_window.0, hi);
    report.num("fit_window_lo", window.0);
    report.num("fit_window_hi", window.1);

    for col in ["grad_u_l2", "grad_u_l3", "grad_u_l4", "p_l2", "p_l3", "p_l4", "sqrt_rho_udot_l2"] {
        match fit(&tr, col, window) {
            Ok(f) => {
                report.num(format!("fit.{col}.exponent"), f.exponent);
                report.num(format!("fit.{col}.r2"), f.r2);
            }
            Err(e) => report.metric(format!("fit.{col}.error"), e.to_string().replace('\n', " ")),
        }
    }
    let r2_min = get("decay.r2_min");
    for (id, col, key) in [("grad_u_decay", "grad_u_l2", "decay.grad_u_exponent_max"), ("udot_decay", "sqrt_rho_udot_l2", "decay.udot_exponent_max")] {
        match fit(&tr, col, window) {
            Ok(f) => report.verdict(
                id,
                f.exponent <= get(key) && f.r2 >= r2_min,
                format!("exponent {:.4} (need <= {}), r2 {:.4} (need >= {r2_min}) on [{}, {}]", f.exponent, get(key), f.r2, window.0, window.1),
            ),
            Err(e) => report.verdict(id, false, format!("fit failed: {e}")),
        }
    }

    let mb = tr.pairs("mass_ball")?;
    let mb_min = mb.iter().fold(f64::INFINITY, |a, p| a.min(p.1));
    let need = get("localization.mass_ball_min") * profile.total_mass - get("localization.mass_ball_slack");
    report.num("mass_ball_min", mb_min);
    report.verdict("mass_ball", mb_min >= need, format!("min mass in the growing half ball {mb_min:.6} (need >= {need})"));

    let mom = tr.pairs("moment_a")?;
    let m0 = mom[0].1;
    let worst = mom.iter().fold(0.0f64, |a, p| a.max(p.1 / (1.0 + p.0) / m0));
    report.num("moment_growth", worst);
    report.verdict(
        "moment_growth",
        worst <= get("localization.moment_growth"),
        format!("max moment(t)/((1+t) moment(0)) = {worst:.4} (need <= {})", get("localization.moment_growth")),
    );
    Ok(())
}

pub(super) fn nonvacuum_longtime(cfg: &ExperimentConfig, dir: &RunDir, resume: Option<Checkpoint>, report: &mut Report) -> Result<()> {
    let params = fluid_params(cfg)?;
    if !(cfg.t_end > 1.0) {
        return Err(Error::Params("nonvacuum_longtime compares against t = 1 and needs t_end > 1".into()));
    }
    let (s0, _) = presets::build(&cfg.ic, grid_of(cfg)?, &params)?;
    integrate(cfg, &params, s0, resume, norms(None), WeightSpec::new(1.5)?, dir.root(), &dir.join("checkpoints"))?;
    let tr = Trajectory::load(dir.root())?;
    report.num("mass_drift", mass_drift(&tr)?);
    report.num("energy_rise_rate", energy_rise(&tr)?);
    let red = get("longtime.reduction");
    let dev = tr.monitor_pairs("rho_dev_l4");
    let cols: [(&str, Vec<(f64, f64)>); 4] = [
        ("rho_dev_l4", dev),
        ("grad_u_l2", tr.pairs("grad_u_l2")?),
        ("grad_u_l3", tr.pairs("grad_u_l3")?),
        ("grad_u_l4", tr.pairs("grad_u_l4")?),
    ];
    for (name, pairs) in cols {
        let (a, b) = (value_at(&pairs, 1.0)?, value_at(&pairs, cfg.t_end)?);
        report.num(format!("{name}.t1"), a);
        report.num(format!("{name}.t_end"), b);
        report.num(format!("{name}.ratio"), b / a);
        if name == "rho_dev_l4" || name == "grad_u_l2" {
            report.verdict(&format!("{name}_decrease"), b <= red * a, format!("t_end / t=1 ratio {:.4} (need <= {red})", b / a));
        }
    }
    Ok(())
}
