use std::path::PathBuf;

use rayon::prelude::*;

use crate::diag::fit_loglog;
use crate::error::{Error, Result};
use crate::isolve::{irun, project_velocity, IConfig};
use crate::model::WeightSpec;
use crate::store::Checkpoint;
use crate::{FluidParams, State};

use super::super::artifacts::{read_kv, write_atomic, write_kv, RunDir};
use super::super::config::ExperimentConfig;
use super::super::criteria::get;
use super::super::presets::{self, with_nu};
use super::single::{integrate, norms};
use super::{fluid_params, grid_of, velocity_distance_in_ball, Report, SweepResult, Trajectory};

type Metrics = Vec<(String, f64)>;

fn member_dir(dir: &RunDir, nu: f64) -> PathBuf {
    dir.join("members").join(format!("nu-{nu}"))
}

fn ckpt_dir(dir: &RunDir, nu: f64) -> PathBuf {
    dir.join("checkpoints").join(format!("nu-{nu}"))
}

fn load_result(path: &std::path::Path) -> Result<Metrics> {
    read_kv(path)?
        .into_iter()
        .map(|(k, v)| v.parse::<f64>().map(|x| (k.clone(), x)).map_err(|_| Error::Series(format!("{}: bad value for {k}", path.display()))))
        .collect()
}

/// Runs every sweep member, in parallel, one integrator per member.
///
/// With a resume checkpoint, members whose result file exists are loaded
/// instead of rerun, and the member whose `nu` matches the checkpoint
/// continues from it.
fn run_members<F>(cfg: &ExperimentConfig, dir: &RunDir, base: &FluidParams, resume: Option<Checkpoint>, member: F) -> Result<Vec<(f64, Result<Metrics>)>>
where
    F: Fn(f64, &FluidParams, Option<Checkpoint>) -> Result<Metrics> + Sync,
{
    let nus = cfg.nu_list.clone().unwrap_or_default();
    let resuming = resume.is_some();
    let target = match &resume {
        Some(ck) => {
            let nu = ck.params.nu();
            let k = nus
                .iter()
                .position(|&n| (n - nu).abs() <= 1e-12 * n)
                .ok_or_else(|| Error::Incompatible(format!("checkpoint nu = {nu} is not in nu_list")))?;
            Some(k)
        }
        None => None,
    };
    Ok(nus
        .par_iter()
        .enumerate()
        .map(|(k, &nu)| {
            let res = (|| {
                let params = with_nu(base, nu)?;
                let result = member_dir(dir, nu).join("result.kv");
                if resuming && target != Some(k) && result.exists() {
                    return load_result(&result);
                }
                let ck = if target == Some(k) { resume.clone() } else { None };
                let m = member(nu, &params, ck)?;
                let kv: Vec<(String, String)> = m.iter().map(|(a, b)| (a.clone(), format!("{b:?}"))).collect();
                write_kv(&result, &kv, &[])?;
                Ok(m)
            })();
            (nu, res)
        })
        .collect())
}

fn write_table(dir: &RunDir, names: &[&str], rows: &[(f64, Result<Metrics>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["nu".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| Error::Series(e.to_string()))?;
    for (nu, m) in rows {
        let mut rec = vec![format!("{nu:?}")];
        for n in names {
            let v = m.as_ref().ok().and_then(|m| m.iter().find(|(k, _)| k == n)).map(|(_, v)| format!("{v:.16e}"));
            rec.push(v.unwrap_or_default());
        }
        w.write_record(&rec).map_err(|e| Error::Series(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Series(e.to_string()))?;
    write_atomic(&dir.join("series.csv"), &bytes)
}

fn metric(m: &Result<Metrics>, name: &str) -> Option<f64> {
    m.as_ref().ok()?.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
}

fn record_members(report: &mut Report, rows: &[(f64, Result<Metrics>)]) {
    for (nu, m) in rows {
        match m {
            Ok(ms) => {
                for (k, v) in ms {
                    report.num(format!("nu.{nu}.{k}"), *v);
                }
            }
            Err(e) => report.metric(format!("nu.{nu}.error"), e.to_string().replace('\n', " ")),
        }
    }
}

fn sweep_result(rows: &[(f64, Result<Metrics>)], fitted: Option<crate::diag::PowerFit<f64>>, report: &Report) -> SweepResult {
    SweepResult {
        per_nu: rows.iter().map(|(nu, m)| (*nu, m.as_ref().cloned().unwrap_or_default())).collect(),
        fitted,
        verdicts: report.verdicts.iter().map(|v| (v.id.clone(), v.passed)).collect(),
    }
}

pub(super) fn density_bound_sweep(cfg: &ExperimentConfig, dir: &RunDir, resume: Option<Checkpoint>, report: &mut Report) -> Result<()> {
    let base = fluid_params(cfg)?;
    let grid = grid_of(cfg)?;
    let (s0, _) = presets::build(&cfg.ic, grid, &base)?;
    let rho0_max = s0.rho.max();
    let scale = 1.0 + base.rho_far() + rho0_max;
    let bound = get("density.bound_factor") * scale;
    let tight = get("density.tight_factor") * scale;
    report.num("rho0_max", rho0_max);
    report.num("bound", bound);
    report.num("tight_bound", tight);
    let rows = run_members(cfg, dir, &base, resume, |nu, params, ck| {
        let out = member_dir(dir, nu);
        integrate(cfg, params, s0.clone(), ck, norms(None), WeightSpec::new(1.5)?, &out, &ckpt_dir(dir, nu))?;
        let tr = Trajectory::load(&out)?;
        let max_rho = tr.pairs("rho_max")?.iter().fold(0.0f64, |a, p| a.max(p.1));
        Ok(vec![("max_rho".into(), max_rho)])
    })?;
    write_table(dir, &["max_rho"], &rows)?;
    record_members(report, &rows);

    let ok: Vec<bool> = rows.iter().map(|(_, m)| metric(m, "max_rho").is_some_and(|v| v <= bound)).collect();
    let n = ok.len();
    let all = ok.iter().all(|&b| b);
    report.metric("all_within_bound", all);
    let onset = (0..n).find(|&k| ok[k..].iter().all(|&b| b)).map(|k| rows[k].0);
    report.metric("onset_nu", onset.map_or("none".into(), |v| format!("{v:?}")));
    report.verdict(
        "bound_top_half",
        ok[n / 2..].iter().all(|&b| b),
        format!("max rho <= {bound:.4} for every nu in the top half of nu_list ({} of {n} members within bound overall)", ok.iter().filter(|&&b| b).count()),
    );
    let last = rows.last().and_then(|(_, m)| metric(m, "max_rho"));
    report.verdict(
        "tight_bound_largest_nu",
        last.is_some_and(|v| v <= tight),
        format!("largest nu: max rho {} (need <= {tight:.4})", last.map_or("n/a".into(), |v| format!("{v:.6}"))),
    );
    report.sweep = Some(sweep_result(&rows, None, report));
    Ok(())
}

pub(super) fn nu_sweep_limit(cfg: &ExperimentConfig, dir: &RunDir, resume: Option<Checkpoint>, report: &mut Report) -> Result<()> {
    let base = fluid_params(cfg)?;
    let grid = grid_of(cfg)?;
    let (s0, _) = presets::build(&cfg.ic, grid, &base)?;
    let icfg = IConfig { cfl: cfg.cfl, ..IConfig::default() };
    let p0 = project_velocity(&s0, &base, &icfg)?;
    let shift = velocity_distance_in_ball(&p0, &s0, f64::INFINITY);
    report.num("projection_change", shift);
    let mut nothing = |_: &State, _: Option<&State>| Ok(());
    let limit = irun(p0, &base, &icfg, cfg.t_end, cfg.t_end, &mut nothing)?;
    let (lo, hi) = cfg.fit_window;
    let rows = run_members(cfg, dir, &base, resume, |nu, params, ck| {
        let out = member_dir(dir, nu);
        let fin = integrate(cfg, params, s0.clone(), ck, norms(None), WeightSpec::new(1.5)?, &out, &ckpt_dir(dir, nu))?;
        let tr = Trajectory::load(&out)?;
        let in_window: Vec<f64> = tr.pairs("div_u_l2")?.into_iter().filter(|p| p.0 >= lo && p.0 <= hi).map(|p| p.1).collect();
        if in_window.is_empty() {
            return Err(Error::Series(format!("no samples in the window [{lo}, {hi}]")));
        }
        let sup = in_window.iter().fold(0.0f64, |a, &v| a.max(v));
        Ok(vec![("div_sup".into(), sup), ("limit_distance".into(), velocity_distance_in_ball(&fin, &limit, cfg.radius))])
    })?;
    write_table(dir, &["div_sup", "limit_distance"], &rows)?;
    record_members(report, &rows);

    let pts: Option<Vec<(f64, f64)>> = rows.iter().map(|(nu, m)| metric(m, "div_sup").map(|v| (*nu, v))).collect();
    let fitted = pts.as_deref().map(fit_loglog).transpose();
    let (elo, ehi, r2_min) = (get("limit.exponent_lo"), get("limit.exponent_hi"), get("limit.r2_min"));
    let fitted = match fitted {
        Ok(Some(f)) => {
            report.num("div_exponent", f.exponent);
            report.num("div_r2", f.r2);
            report.verdict(
                "div_exponent",
                f.exponent >= elo && f.exponent <= ehi && f.r2 >= r2_min,
                format!("sup ||div u||_2 ~ nu^{:.4} (need [{elo}, {ehi}]), r2 {:.4} (need >= {r2_min})", f.exponent, f.r2),
            );
            Some(f)
        }
        Ok(None) => {
            report.verdict("div_exponent", false, "a sweep member failed");
            None
        }
        Err(e) => {
            report.verdict("div_exponent", false, format!("fit failed: {e}"));
            None
        }
    };
    let dist: Option<Vec<f64>> = rows.iter().map(|(_, m)| metric(m, "limit_distance")).collect();
    if let Some(d) = dist.as_ref().filter(|d| d.len() >= 3) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| r.0).zip(d.iter().copied()).collect();
        if let Ok(f) = fit_loglog(&pts) {
            report.num("limit_distance_exponent", f.exponent);
        }
    }
    let decreasing = dist.as_ref().is_some_and(|d| d.windows(2).all(|w| w[1] < w[0]));
    report.verdict(
        "limit_distance_decreasing",
        decreasing,
        format!("||u_nu - u||_2 on the half ball of radius {} at t = {}: {:?}", cfg.radius, cfg.t_end, dist.unwrap_or_default()),
    );
    report.sweep = Some(sweep_result(&rows, fitted, report));
    Ok(())
}
