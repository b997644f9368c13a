mod checks;
mod single;
mod sweep;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::csolve::{Sink, StepperConfig};
use crate::diag::{edge_activity, sample, weighted_edge_activity, NormSpec, PowerFit};
use crate::error::{Error, Result};
use crate::model::{make_grid, make_params, Field, Loc, WeightSpec};
use crate::store::{read_checkpoint, read_series, write_checkpoint, Checkpoint, SeriesSchema, SeriesTable, SeriesWriter};
use crate::{FluidParams, Grid, State};

use super::artifacts::{write_kv, RunDir};
use super::config::ExperimentConfig;
use super::criteria;
use super::ExperimentId;

/// Width in cells of the far-edge band watched by the edge monitor.
pub(crate) const EDGE_BAND: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of a ν-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `(nu, [(metric, value)])` in `nu_list` order.
    pub per_nu: Vec<(f64, Vec<(String, f64)>)>,
    /// Power fit of the sweep metric against `nu`, when one applies.
    pub fitted: Option<PowerFit<f64>>,
    pub verdicts: Vec<(String, bool)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub metrics: Vec<(String, String)>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub sweep: Option<SweepResult>,
}

impl Report {
    pub(crate) fn metric(&mut self, key: impl Into<String>, value: impl Display) {
        self.metrics.push((key.into(), value.to_string()));
    }

    pub(crate) fn num(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.push((key.into(), format!("{value:?}")));
    }

    pub(crate) fn verdict(&mut self, id: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.notes.push(format!("{} {}: {}", if passed { "PASS" } else { "FAIL" }, id, detail));
        self.verdicts.push(Verdict { id: id.to_string(), passed, detail });
    }

    /// Looks up a metric recorded under `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn verdict_of(&self, id: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Checkpoint to resume from.
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: Report,
    /// Set when the experiment aborted.
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.report.verdicts.iter().all(|v| v.passed)
    }
}

/// Runs one experiment and writes its artifacts. Errors are returned only
/// when the artifacts themselves cannot be written; failures of the
/// experiment are recorded in the outcome.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    if opts.resume.is_some() && !cfg.name.resumable() {
        return Err(Error::Params(format!("experiment {} does not take --resume", cfg.name.as_str())));
    }
    let dir = RunDir::create(cfg)?;
    let resume = match &opts.resume {
        Some(p) => Some(read_checkpoint(p)?),
        None => None,
    };
    let mut report = Report::default();
    let res = match cfg.name {
        ExperimentId::ReflectionUnit => checks::reflection_unit(cfg, &dir, &mut report),
        ExperimentId::MmsConvergence => checks::mms_convergence(cfg, &dir, &mut report),
        ExperimentId::ZlotnikSuite => checks::zlotnik_suite(cfg, &dir, &mut report),
        ExperimentId::VacuumDecay => single::vacuum_decay(cfg, &dir, resume, &mut report),
        ExperimentId::NonvacuumLongtime => single::nonvacuum_longtime(cfg, &dir, resume, &mut report),
        ExperimentId::DensityBoundSweep => sweep::density_bound_sweep(cfg, &dir, resume, &mut report),
        ExperimentId::NuSweepLimit => sweep::nu_sweep_limit(cfg, &dir, resume, &mut report),
    };
    let error = res.err().map(|e| e.to_string());
    write_summary(cfg, &dir, &report, error.as_deref())?;
    Ok(RunOutcome { dir: dir.root().to_path_buf(), report, error })
}

fn write_summary(cfg: &ExperimentConfig, dir: &RunDir, report: &Report, error: Option<&str>) -> Result<()> {
    let mut kv: Vec<(String, String)> = vec![
        ("experiment".into(), cfg.name.as_str().into()),
        ("run_id".into(), super::run_id(cfg)),
        ("criteria.version".into(), criteria::VERSION.into()),
    ];
    for t in criteria::TABLE {
        kv.push((format!("criteria.{}", t.key), format!("{:?}", t.value)));
    }
    kv.extend(report.metrics.iter().map(|(k, v)| (format!("metric.{k}"), v.clone())));
    let mut verdicts: Vec<(String, String)> =
        report.verdicts.iter().map(|v| (v.id.clone(), if v.passed { "PASS" } else { "FAIL" }.to_string())).collect();
    if let Some(e) = error {
        kv.push(("error".into(), e.replace('\n', " ")));
        verdicts.push(("run".into(), "FAIL".into()));
    }
    let overall = error.is_none() && report.verdicts.iter().all(|v| v.passed);
    kv.extend(verdicts.iter().map(|(k, v)| (format!("verdict.{k}"), v.clone())));
    kv.push(("status".into(), if overall { "PASS" } else { "FAIL" }.into()));
    let mut text = vec![format!("{} run {}", cfg.name.as_str(), super::run_id(cfg))];
    text.extend(report.notes.iter().cloned());
    if let Some(e) = error {
        text.push(format!("aborted: {e}"));
    }
    write_kv(&dir.join("summary.kv"), &kv, &text)?;
    write_kv(&dir.join("verdicts.kv"), &verdicts, &[])
}

pub(crate) fn fluid_params(cfg: &ExperimentConfig) -> Result<FluidParams> {
    let p = &cfg.params;
    make_params(p.mu, p.lambda, p.gamma, p.cap_a, p.rho_far)
}

pub(crate) fn grid_of(cfg: &ExperimentConfig) -> Result<Grid> {
    make_grid(cfg.grid.lx, cfg.grid.ly, cfg.grid.nx, cfg.grid.ny)
}

pub(crate) fn stepper(cfg: &ExperimentConfig) -> StepperConfig<f64> {
    StepperConfig { cfl: cfg.cfl, ..StepperConfig::default() }
}

/// Rejects a checkpoint written for another grid or other constants.
pub(crate) fn check_compatible(ck: &Checkpoint, grid: &Grid, params: &FluidParams) -> Result<()> {
    if ck.state.grid() != grid {
        return Err(Error::Incompatible("checkpoint grid differs from the configured grid".into()));
    }
    if ck.params != *params {
        return Err(Error::Incompatible(format!("checkpoint parameters {:?} differ from the configured {:?}", ck.params, params)));
    }
    Ok(())
}

fn checkpoint_name(t: f64) -> String {
    format!("t-{t:.6}.ckpt")
}

/// Extra per-sample quantities kept next to the series.
const MONITOR_COLUMNS: [&str; 4] = ["t", "edge_activity", "weighted_edge_activity", "rho_dev_l4"];

/// Sink writing the diagnostic series, the monitor table and periodic
/// checkpoints of one integration.
pub(crate) struct Recorder {
    params: FluidParams,
    wspec: WeightSpec<f64>,
    norms: NormSpec<f64>,
    series: SeriesWriter,
    monitor: csv::Writer<fs::File>,
    ckpt_dir: PathBuf,
    every: f64,
    next_ckpt: f64,
    rho_floor: f64,
    skip_first: bool,
    last_ckpt_t: Option<f64>,
}

impl Recorder {
    /// Opens the outputs in `out`; with `restart` the existing files are cut
    /// back to the restart time and the first (restart) sample is not
    /// written again.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn open(
        out: &Path,
        ckpt_dir: &Path,
        params: FluidParams,
        wspec: WeightSpec<f64>,
        norms: NormSpec<f64>,
        every: f64,
        rho_floor: f64,
        restart: Option<f64>,
    ) -> Result<Self> {
        fs::create_dir_all(out)?;
        fs::create_dir_all(ckpt_dir)?;
        let schema = SeriesSchema::from_norms(&norms);
        let spath = out.join("series.csv");
        let mpath = out.join("monitor.csv");
        let (series, kept) = match restart {
            Some(t) => {
                let after = t.next_up();
                let kept = read_monitor(&mpath)?.into_iter().filter(|r| r[0] < after).collect::<Vec<_>>();
                (SeriesWriter::resume(&spath, schema, after)?, kept)
            }
            None => (SeriesWriter::create(&spath, schema)?, Vec::new()),
        };
        let mut monitor = csv::Writer::from_path(&mpath).map_err(csv_err)?;
        monitor.write_record(MONITOR_COLUMNS).map_err(csv_err)?;
        for row in &kept {
            monitor.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(csv_err)?;
        }
        monitor.flush()?;
        let t0 = restart.unwrap_or(0.0);
        let next_ckpt = ((t0 / every + 1e-9).floor() + 1.0) * every;
        Ok(Recorder {
            params,
            wspec,
            norms,
            series,
            monitor,
            ckpt_dir: ckpt_dir.to_path_buf(),
            every,
            next_ckpt,
            rho_floor,
            skip_first: restart.is_some(),
            last_ckpt_t: restart,
        })
    }

    fn write_ckpt(&mut self, state: &State) -> Result<()> {
        write_checkpoint(state, &self.params, self.rho_floor, &self.ckpt_dir.join(checkpoint_name(state.t)))?;
        self.last_ckpt_t = Some(state.t);
        Ok(())
    }

    /// Writes a checkpoint of the final state unless one exists already.
    pub(crate) fn finish(&mut self, state: &State) -> Result<()> {
        if self.last_ckpt_t != Some(state.t) {
            self.write_ckpt(state)?;
        }
        Ok(())
    }
}

impl Sink<f64> for Recorder {
    fn record(&mut self, state: &State, prev: Option<&State>) -> Result<()> {
        if self.skip_first {
            self.skip_first = false;
            return Ok(());
        }
        let rec = sample(state, prev, &self.params, &self.wspec, &self.norms)?;
        self.series.append(&rec)?;
        let rf = self.params.rho_far();
        let dev = state.rho.map(|r| r - rf).lp_norm(4.0);
        let row = [state.t, edge_activity(state, EDGE_BAND), weighted_edge_activity(state, EDGE_BAND), dev];
        self.monitor.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(csv_err)?;
        self.monitor.flush()?;
        if state.t >= self.next_ckpt * (1.0 - 1e-12) {
            self.write_ckpt(state)?;
            self.next_ckpt = ((state.t / self.every + 1e-9).floor() + 1.0) * self.every;
        }
        Ok(())
    }

    fn checkpoint(&mut self, state: &State) -> Result<()> {
        self.write_ckpt(state)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Series(e.to_string())
}

fn read_monitor(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec.iter().map(|c| c.parse::<f64>().map_err(|_| Error::Series(format!("{}: bad cell `{c}`", path.display())))).collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Series and monitor table of a finished integration.
pub(crate) struct Trajectory {
    pub series: SeriesTable,
    /// Rows of [`MONITOR_COLUMNS`].
    pub monitor: Vec<Vec<f64>>,
}

impl Trajectory {
    pub(crate) fn load(out: &Path) -> Result<Self> {
        Ok(Trajectory { series: read_series(&out.join("series.csv"))?, monitor: read_monitor(&out.join("monitor.csv"))? })
    }

    pub(crate) fn pairs(&self, col: &str) -> Result<Vec<(f64, f64)>> {
        self.series.pairs(col).ok_or_else(|| Error::Series(format!("no column {col}")))
    }

    pub(crate) fn monitor_pairs(&self, col: &str) -> Vec<(f64, f64)> {
        let k = MONITOR_COLUMNS.iter().position(|c| *c == col).expect("monitor column");
        self.monitor.iter().map(|r| (r[0], r[k])).collect()
    }
}

/// Value of a `(t, v)` series at time `t`, to a relative tolerance.
pub(crate) fn value_at(pairs: &[(f64, f64)], t: f64) -> Result<f64> {
    pairs
        .iter()
        .find(|p| (p.0 - t).abs() <= 1e-9 * t.abs().max(1.0))
        .map(|p| p.1)
        .ok_or_else(|| Error::Series(format!("no sample at t = {t}")))
}

/// `||a - b||_2` over the cells whose centers lie in the half ball of
/// radius `r`, with face velocities averaged to the cell centers.
pub(crate) fn velocity_distance_in_ball(a: &State, b: &State, r: f64) -> f64 {
    let g = *a.grid();
    let mut acc = Field::zeros(g, Loc::Cell);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let (x, y) = (g.xc(i), g.yc(j));
            if x * x + y * y < r * r {
                let d1 = 0.5 * ((a.vel.u.at(i, j) - b.vel.u.at(i, j)) + (a.vel.u.at(i + 1, j) - b.vel.u.at(i + 1, j)));
                let d2 = 0.5 * ((a.vel.v.at(i, j) - b.vel.v.at(i, j)) + (a.vel.v.at(i, j + 1) - b.vel.v.at(i, j + 1)));
                acc.set(i, j, d1 * d1 + d2 * d2);
            }
        }
    }
    acc.integral().sqrt()
}
