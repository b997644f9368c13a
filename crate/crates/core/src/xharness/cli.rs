//! `hpns` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{parse_config, run_experiment, ExperimentId, RunOptions};

/// Exit status of a run whose verdicts did not all pass.
pub const EXIT_FAILED: i32 = 1;
/// Exit status of a malformed invocation or configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hpns", about = "Experiments for compressible Navier-Stokes on the half plane with slip walls")]
struct Cli {
    /// Output root, overriding `out_dir` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; affects wall-clock time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Continue a run (or the matching sweep member) from this checkpoint.
    #[arg(long, global = true)]
    resume: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the experiment described by a configuration file.
    Run { config: PathBuf },
    /// Print the registered experiment ids.
    List,
    /// Print what an experiment does and its default configuration.
    Describe { experiment: String },
}

/// Parses `args` (program name first), dispatches and returns the exit
/// status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return EXIT_USAGE;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.cmd {
        Cmd::List => {
            for id in ExperimentId::ALL {
                let _ = writeln!(out, "{}", id.as_str());
            }
            0
        }
        Cmd::Describe { experiment } => match ExperimentId::parse(&experiment) {
            Some(id) => {
                let _ = writeln!(out, "{}\n\n{}\n\ndefault configuration:\n{}", id.as_str(), id.describe(), super::echo(&super::defaults(id)));
                0
            }
            None => {
                let _ = writeln!(err, "error: unknown experiment `{experiment}`; try `hpns list`");
                EXIT_USAGE
            }
        },
        Cmd::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot read {}: {e}", config.display());
                    return EXIT_USAGE;
                }
            };
            let mut cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", config.display());
                    return EXIT_USAGE;
                }
            };
            if let Some(o) = cli.out {
                cfg.out_dir = o;
            }
            if cli.resume.is_some() && !cfg.name.resumable() {
                let _ = writeln!(err, "error: experiment {} does not take --resume", cfg.name.as_str());
                return EXIT_USAGE;
            }
            match run_experiment(&cfg, &RunOptions { resume: cli.resume }) {
                Ok(outcome) => {
                    for line in &outcome.report.notes {
                        let _ = writeln!(out, "{line}");
                    }
                    if let Some(e) = &outcome.error {
                        let _ = writeln!(out, "aborted: {e}");
                    }
                    let status = if outcome.passed() { "PASS" } else { "FAIL" };
                    let _ = writeln!(out, "{status} {}", outcome.dir.display());
                    if outcome.passed() {
                        0
                    } else {
                        EXIT_FAILED
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_FAILED
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("hpns").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn list_prints_the_seven_ids() {
        let (code, out, _) = call(&["list"]);
        assert_eq!(code, 0);
        let ids: Vec<&str> = out.lines().collect();
        assert_eq!(ids.len(), 7);
        assert!(ids.contains(&"zlotnik_suite") && ids.contains(&"nu_sweep_limit"));
    }

    #[test]
    fn describe_known_and_unknown() {
        let (code, out, _) = call(&["describe", "vacuum_decay"]);
        assert_eq!(code, 0);
        assert!(out.contains("name = \"vacuum_decay\""));
        assert_eq!(call(&["describe", "nope"]).0, EXIT_USAGE);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "/nonexistent/config.toml"]).0, EXIT_USAGE);
        assert_eq!(call(&["--threads", "0", "list"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn bad_config_and_misplaced_resume_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.cfg");
        std::fs::write(&bad, "name = \"vacuum_decay\"\n[params]\nlambda = -5\nmu = 1\n").unwrap();
        let (code, _, err) = call(&["run", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("line 3"), "{err}");
        let ok = dir.path().join("ok.cfg");
        std::fs::write(&ok, "name = \"reflection_unit\"\n").unwrap();
        assert_eq!(call(&["--resume", "x.ckpt", "run", ok.to_str().unwrap()]).0, EXIT_USAGE);
    }
}
