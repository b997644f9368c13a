//! Experiment runner: configuration documents, initial-condition presets,
//! the registered experiments and the `hpns` command line.
//!
//! Every run writes `<out>/<experiment>/<run-id>/` holding `config.echo`,
//! `series.csv`, `summary.kv`, `verdicts.kv` and `checkpoints/`. The run id
//! is a checksum of the resolved configuration, so identical configurations
//! land in the same directory and produce identical bytes.

mod artifacts;
pub mod cli;
pub mod config;
pub mod criteria;
mod experiments;
pub mod presets;

pub use artifacts::run_id;
pub use config::{defaults, echo, parse_config, ExperimentConfig, GridSpec, IcSpec, ParamsSpec, Preset};
pub use experiments::{run_experiment, Report, RunOptions, RunOutcome, SweepResult, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    ReflectionUnit,
    MmsConvergence,
    DensityBoundSweep,
    VacuumDecay,
    NonvacuumLongtime,
    NuSweepLimit,
    ZlotnikSuite,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::ReflectionUnit,
        ExperimentId::MmsConvergence,
        ExperimentId::DensityBoundSweep,
        ExperimentId::VacuumDecay,
        ExperimentId::NonvacuumLongtime,
        ExperimentId::NuSweepLimit,
        ExperimentId::ZlotnikSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::ReflectionUnit => "reflection_unit",
            ExperimentId::MmsConvergence => "mms_convergence",
            ExperimentId::DensityBoundSweep => "density_bound_sweep",
            ExperimentId::VacuumDecay => "vacuum_decay",
            ExperimentId::NonvacuumLongtime => "nonvacuum_longtime",
            ExperimentId::NuSweepLimit => "nu_sweep_limit",
            ExperimentId::ZlotnikSuite => "zlotnik_suite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    /// Accepts `--resume <checkpoint>`.
    pub fn resumable(self) -> bool {
        matches!(
            self,
            ExperimentId::DensityBoundSweep | ExperimentId::VacuumDecay | ExperimentId::NonvacuumLongtime | ExperimentId::NuSweepLimit
        )
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentId::ReflectionUnit => {
                "Reflection identities and the Neumann flux solve.\n\
                 On `cases` random smooth fields the gradient energy of the even or odd extension is twice the\n\
                 half-plane energy to 1e-12. A manufactured G = cos(pi x/lx) cos(pi y/ly) + cos(2 pi x/lx) cos(3 pi y/ly)/2\n\
                 is recovered from its face gradient on `levels` grids (base grid doubled each time); error ratios\n\
                 per halving must lie in [3.5, 4.5]."
            }
            ExperimentId::MmsConvergence => {
                "Spatial order of the compressible stepper on the manufactured solution rho = 1,\n\
                 u = (cos(y) e^-t, 0) with body force (mu - 1) cos(y) e^-t and matching far-edge data.\n\
                 Runs `levels` grids to t_end with dt ~ dt_h2 h^2; the observed order must be >= 1.8 for every pair."
            }
            ExperimentId::DensityBoundSweep => {
                "Runs the compressible stepper for every nu in nu_list (lambda = nu - 2 mu) and records max_t ||rho||_inf.\n\
                 The sweep passes when every member in the top half of nu_list stays below 2 (1 + rho_far + ||rho0||_inf);\n\
                 the largest nu must also stay below 1.5 (1 + rho_far + ||rho0||_inf). The empirical onset is reported."
            }
            ExperimentId::VacuumDecay => {
                "Long vacuum run (rho_far = 0, A = 0, unit mass). Tracks mass, energy, the mass in the half ball of\n\
                 radius N1 (1 + t) with N1 the smallest radius holding mass 1/4 at t = 0, and the moment int rho xbar^a.\n\
                 Fits decay exponents of ||grad u||_p, ||P||_r and ||sqrt(rho) u_dot||_2 over fit_window, cut at the first\n\
                 sample where the density-weighted edge activity exceeds 1e-6."
            }
            ExperimentId::NonvacuumLongtime => {
                "Non-vacuum run (rho_far > 0). Checks that ||rho - rho_far||_4 and ||grad u||_2 at t_end are at most\n\
                 0.2 times their values at t = 1; ||grad u||_p for p = 3, 4 are reported."
            }
            ExperimentId::NuSweepLimit => {
                "Runs the compressible stepper for every nu in nu_list from divergence-free data (shear_divfree) and the\n\
                 incompressible limit solver once from the same data. Fits sup over fit_window of ||div u||_2 against nu\n\
                 (exponent in [-0.65, -0.35], r^2 >= 0.95) and requires ||u_nu - u||_2 on the half ball of the given\n\
                 radius at t_end to decrease strictly with nu."
            }
            ExperimentId::ZlotnikSuite => {
                "Checks the ODE comparison bound on `cases` randomized cases y' = g(y) + h'(t) (g decreasing, h with\n\
                 controlled increments; every fourth case deliberately understates N0 and must be flagged as a\n\
                 hypothesis failure or still hold). Then follows a particle through two compressible runs\n\
                 (mu = 1, lambda = 0, gamma = 1.4, rho_far = 1; rho = 1 + 0.05 tanh(x/2) e^(-y^2/8), u = (0.02 e^(-2(x^2 + (y-1.5)^2)), 0);\n\
                 grids (nx, ny) and (2nx, 2ny), dt = h/100 up to t_end) and requires the characteristic residual to drop by >= 3."
            }
        }
    }
}
