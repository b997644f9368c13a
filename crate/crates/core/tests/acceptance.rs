//! Acceptance suite: runs every experiment at its acceptance settings and
//! prints one PASS/FAIL line per criterion. Exits non-zero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use halfplane_ns::store::read_series;
use halfplane_ns::xharness::{defaults, run_experiment, ExperimentConfig, ExperimentId, RunOptions, RunOutcome};

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn cfg(id: ExperimentId, out: &Path) -> ExperimentConfig {
    let mut c = defaults(id);
    c.out_dir = out.to_path_buf();
    c
}

fn run(c: &ExperimentConfig) -> (RunOutcome, Duration) {
    let t = Instant::now();
    let out = run_experiment(c, &RunOptions::default()).expect("artifacts");
    (out, t.elapsed())
}

/// Pass state and details of the named verdicts, plus the abort reason.
fn verdicts(out: &RunOutcome, ids: &[&str]) -> (bool, String) {
    let mut ok = out.error.is_none();
    let mut parts = Vec::new();
    if let Some(e) = &out.error {
        parts.push(format!("aborted: {e}"));
    }
    for id in ids {
        match out.report.verdict_of(id) {
            Some(v) => {
                ok &= v.passed;
                parts.push(format!("{id}: {}", v.detail));
            }
            None => {
                ok = false;
                parts.push(format!("{id}: missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn timed(ok: bool, detail: String, took: Duration, limit: u64) -> (bool, String) {
    let within = took <= Duration::from_secs(limit);
    (ok && within, format!("{detail}; runtime {:.1} s (limit {limit} s)", took.as_secs_f64()))
}

fn c11(root: &Path) -> (bool, String) {
    let mut c = cfg(ExperimentId::NonvacuumLongtime, &root.join("a"));
    c.grid.lx = 2.0;
    c.grid.ly = 4.0;
    c.grid.nx = 32;
    c.grid.ny = 32;
    c.t_end = 2.0;
    c.sample_every = 0.05;
    c.checkpoint_every = 1.0;
    let (a, _) = run(&c);
    let mut c2 = c.clone();
    c2.out_dir = root.join("b");
    let (b, _) = run(&c2);
    let bytes = |o: &RunOutcome| std::fs::read(o.dir.join("series.csv")).unwrap_or_default();
    let identical = !bytes(&a).is_empty() && bytes(&a) == bytes(&b);

    let ck = b.dir.join("checkpoints").join("t-1.000000.ckpt");
    let resumed = run_experiment(&c2, &RunOptions { resume: Some(ck) });
    let worst = match (resumed, read_series(&a.dir.join("series.csv"))) {
        (Ok(r), Ok(sa)) if r.error.is_none() => match read_series(&r.dir.join("series.csv")) {
            Ok(sb) if sb.rows.len() == sa.rows.len() => sa
                .rows
                .iter()
                .zip(&sb.rows)
                .flat_map(|(x, y)| x.iter().zip(y))
                .map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => (x - y).abs() / x.abs().max(1.0),
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        },
        _ => f64::INFINITY,
    };
    (identical && worst <= 1e-12, format!("repeat run bit-identical: {identical}; resume vs straight max relative deviation {worst:.3e} (need <= 1e-12)"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let mut lines = Vec::new();
    let mut push = |id, title, (passed, detail): (bool, String)| lines.push(Line { id, title, passed, detail });

    let (refl, took) = run(&cfg(ExperimentId::ReflectionUnit, root));
    let (ok, d) = verdicts(&refl, &["energy_identity"]);
    push(1, "reflection identities", timed(ok, d, took, 5));
    let (ok, d) = verdicts(&refl, &["neumann_order"]);
    push(2, "Neumann flux solve", timed(ok, d, took, 60));
    let (mms, took) = run(&cfg(ExperimentId::MmsConvergence, root));
    let (ok, d) = verdicts(&mms, &["spatial_order"]);
    push(3, "MMS convergence", timed(ok, d, took, 300));
    let (zl, _) = run(&cfg(ExperimentId::ZlotnikSuite, root));
    let (ok, d) = verdicts(&zl, &["comparison_bound", "characteristic_refinement"]);
    let c10 = (ok && zl.report.get_f64("cases") == Some(200.0), format!("{d}; cases {}", zl.report.get("cases").unwrap_or("?")));

    let mut small_vac = cfg(ExperimentId::VacuumDecay, &root.join("vac128"));
    small_vac.grid.lx = 4.0;
    small_vac.grid.ly = 8.0;
    small_vac.grid.nx = 128;
    small_vac.grid.ny = 128;
    let (vac128, vac256, dens, lim, nonvac, c11) = std::thread::scope(|s| {
        let vac128 = s.spawn(|| run(&small_vac));
        let vac256 = s.spawn(|| run(&cfg(ExperimentId::VacuumDecay, &root.join("vac256"))));
        let dens = s.spawn(|| run(&cfg(ExperimentId::DensityBoundSweep, root)));
        let lim = s.spawn(|| run(&cfg(ExperimentId::NuSweepLimit, root)));
        let nonvac = s.spawn(|| run(&cfg(ExperimentId::NonvacuumLongtime, root)));
        let det = s.spawn(|| c11(&root.join("determinism")));
        let j = "experiment thread";
        (vac128.join().expect(j), vac256.join().expect(j), dens.join().expect(j), lim.join().expect(j), nonvac.join().expect(j), det.join().expect(j))
    });
    let ((vac128, t128), (vac256, t256), (dens, tdens), (lim, tlim), (nonvac, _)) = (vac128, vac256, dens, lim, nonvac);

    let (ok, d) = verdicts(&vac128, &["mass_drift", "energy_monotone"]);
    push(4, "conservation and energy (vacuum, 128x128)", timed(ok, d, t128, 600));
    let all = dens.report.get("all_within_bound") == Some("true");
    let (ok, d) = verdicts(&dens, &["bound_top_half", "tight_bound_largest_nu"]);
    let (ok, d) = timed(ok && all, format!("every member within bound: {all}; {d}"), tdens, 1800);
    push(5, "density bound sweep", (ok, d));
    let (ok, d) = verdicts(&lim, &["div_exponent", "limit_distance_decreasing"]);
    push(6, "incompressible-limit scaling", timed(ok, d, tlim, 2700));
    let (ok, d) = verdicts(&vac256, &["grad_u_decay", "udot_decay"]);
    let window = format!("window [{}, {}]", vac256.report.get("fit_window_lo").unwrap_or("?"), vac256.report.get("fit_window_hi").unwrap_or("?"));
    push(7, "vacuum decay rates (256x128)", timed(ok, format!("{d}; {window}"), t256, 1800));
    push(8, "mass localization (vacuum, 128x128)", verdicts(&vac128, &["mass_ball", "moment_growth"]));
    push(9, "non-vacuum large-time behavior", verdicts(&nonvac, &["rho_dev_l4_decrease", "grad_u_l2_decrease"]));
    push(10, "comparison-lemma suite", c10);
    push(11, "determinism and restart", c11);

    lines.sort_by_key(|l| l.id);
    let mut failed = 0;
    for l in &lines {
        println!("criterion {:>2} {:<44} {}  {}", l.id, l.title, if l.passed { "PASS" } else { "FAIL" }, l.detail);
        failed += usize::from(!l.passed);
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
