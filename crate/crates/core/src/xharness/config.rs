//! Experiment configuration documents.
//!
//! A document is a list of `key = value` lines. Keys before the first
//! `[section]` header are global (`name`, `seed`, `out_dir`); the sections are
//! `[params]`, `[grid]`, `[ic]` and `[run]`. Values are numbers, quoted
//! strings or bracketed number lists; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{make_grid, make_params};

use super::ExperimentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    GaussBump,
    PerturbedConstant,
    ShearDivfree,
    Compressive,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::GaussBump, Preset::PerturbedConstant, Preset::ShearDivfree, Preset::Compressive];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::GaussBump => "gauss_bump",
            Preset::PerturbedConstant => "perturbed_constant",
            Preset::ShearDivfree => "shear_divfree",
            Preset::Compressive => "compressive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsSpec {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub cap_a: f64,
    pub rho_far: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Initial-condition preset and its shape parameters; see
/// [`super::presets`] for the formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcSpec {
    pub preset: Preset,
    pub amplitude: f64,
    pub width: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: ExperimentId,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub ic: IcSpec,
    pub t_end: f64,
    pub sample_every: f64,
    pub nu_list: Option<Vec<f64>>,
    pub fit_window: (f64, f64),
    pub cfl: f64,
    pub checkpoint_every: f64,
    /// Radius of the half ball for the limit comparison.
    pub radius: f64,
    /// Randomized cases (reflection identities, comparison lemma).
    pub cases: usize,
    /// Number of grids in a refinement study.
    pub levels: usize,
    /// Step size as a multiple of `h^2` in the manufactured-solution study.
    pub dt_h2: f64,
    pub moment_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64, String),
    Str(String),
    List(Vec<f64>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Num(..) => "number",
            Value::Str(_) => "string",
            Value::List(_) => "list",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
}

const SECTIONS: [&str; 4] = ["params", "grid", "ic", "run"];

/// Keys each experiment reads, as `section.key` (globals have no section).
fn accepted(id: ExperimentId) -> &'static [&'static str] {
    use ExperimentId::*;
    match id {
        ReflectionUnit => &["grid.lx", "grid.ly", "grid.nx", "grid.ny", "run.cases", "run.levels"],
        MmsConvergence => &["params.mu", "params.lambda", "params.gamma", "grid.lx", "grid.ly", "grid.nx", "grid.ny", "run.t_end", "run.levels", "run.dt_h2"],
        DensityBoundSweep => &[
            "params.mu", "params.gamma", "params.A", "params.rho_far", "grid.lx", "grid.ly", "grid.nx", "grid.ny", "ic.preset",
            "ic.amplitude", "ic.width", "ic.center_x", "ic.center_y", "ic.velocity", "run.t_end", "run.sample_every", "run.nu_list",
            "run.cfl", "run.checkpoint_every",
        ],
        VacuumDecay => &[
            "params.mu", "params.lambda", "params.gamma", "params.A", "params.rho_far", "grid.lx", "grid.ly", "grid.nx", "grid.ny",
            "ic.preset", "ic.amplitude", "ic.width", "ic.center_x", "ic.center_y", "ic.velocity", "run.t_end", "run.sample_every",
            "run.fit_window", "run.cfl", "run.checkpoint_every", "run.moment_a",
        ],
        NonvacuumLongtime => &[
            "params.mu", "params.lambda", "params.gamma", "params.A", "params.rho_far", "grid.lx", "grid.ly", "grid.nx", "grid.ny",
            "ic.preset", "ic.amplitude", "ic.width", "ic.center_x", "ic.center_y", "ic.velocity", "run.t_end", "run.sample_every",
            "run.cfl", "run.checkpoint_every",
        ],
        NuSweepLimit => &[
            "params.mu", "params.gamma", "params.A", "params.rho_far", "grid.lx", "grid.ly", "grid.nx", "grid.ny", "ic.preset",
            "ic.amplitude", "ic.width", "ic.center_x", "ic.center_y", "ic.velocity", "run.t_end", "run.sample_every", "run.nu_list",
            "run.fit_window", "run.cfl", "run.checkpoint_every", "run.radius",
        ],
        ZlotnikSuite => &["grid.lx", "grid.ly", "grid.nx", "grid.ny", "run.t_end", "run.cases"],
    }
}

const GLOBALS: [&str; 3] = ["name", "seed", "out_dir"];

/// Documented defaults of every experiment.
pub fn defaults(id: ExperimentId) -> ExperimentConfig {
    use ExperimentId::*;
    let mut c = ExperimentConfig {
        name: id,
        seed: 0,
        out_dir: PathBuf::from("out"),
        params: ParamsSpec { mu: 1.0, lambda: 0.0, gamma: 2.0, cap_a: 0.0, rho_far: 1.0 },
        grid: GridSpec { lx: 4.0, ly: 8.0, nx: 128, ny: 128 },
        ic: IcSpec { preset: Preset::PerturbedConstant, amplitude: 0.5, width: 1.0, center_x: 0.0, center_y: 0.0, velocity: 0.0 },
        t_end: 1.0,
        sample_every: 0.05,
        nu_list: None,
        fit_window: (0.0, 1.0),
        cfl: 0.4,
        checkpoint_every: 5.0,
        radius: 2.0,
        cases: 20,
        levels: 3,
        dt_h2: 0.5,
        moment_a: 1.5,
    };
    match id {
        ReflectionUnit => {
            c.grid = GridSpec { lx: 1.0, ly: 2.0, nx: 64, ny: 64 };
        }
        MmsConvergence => {
            c.grid = GridSpec { lx: std::f64::consts::FRAC_PI_4, ly: std::f64::consts::FRAC_PI_2, nx: 16, ny: 16 };
            c.t_end = 0.5;
        }
        DensityBoundSweep => {
            c.grid = GridSpec { lx: 3.0, ly: 6.0, nx: 64, ny: 64 };
            c.ic = IcSpec { preset: Preset::Compressive, amplitude: 0.5, width: 1.0, center_x: 0.0, center_y: 0.0, velocity: 1.0 };
            c.t_end = 2.0;
            c.sample_every = 0.05;
            c.nu_list = Some(vec![50.0, 100.0, 200.0, 400.0]);
            c.checkpoint_every = 0.5;
        }
        VacuumDecay => {
            c.params.rho_far = 0.0;
            c.grid = GridSpec { lx: 8.0, ly: 8.0, nx: 256, ny: 128 };
            c.ic = IcSpec { preset: Preset::GaussBump, amplitude: 1.0, width: 1.0, center_x: 0.0, center_y: 0.0, velocity: 0.0 };
            c.t_end = 30.0;
            c.sample_every = 0.25;
            c.fit_window = (2.0, 30.0);
            c.checkpoint_every = 10.0;
        }
        NonvacuumLongtime => {
            c.params.lambda = 8.0;
            c.t_end = 12.0;
            c.sample_every = 0.25;
            c.checkpoint_every = 4.0;
        }
        NuSweepLimit => {
            c.grid = GridSpec { lx: 3.0, ly: 6.0, nx: 64, ny: 64 };
            c.ic = IcSpec { preset: Preset::ShearDivfree, amplitude: 0.5, width: 1.0, center_x: 0.0, center_y: 0.0, velocity: 0.5 };
            c.nu_list = Some(vec![50.0, 100.0, 200.0, 400.0]);
            c.fit_window = (0.2, 1.0);
            c.radius = 1.5;
            c.checkpoint_every = 0.5;
        }
        ZlotnikSuite => {
            c.grid = GridSpec { lx: 4.0, ly: 4.0, nx: 32, ny: 16 };
            c.t_end = 0.2;
            c.cases = 200;
        }
    }
    c
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn strip_comment(s: &str) -> &str {
    let mut quoted = false;
    for (k, ch) in s.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &s[..k],
            _ => {}
        }
    }
    s
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(err(line, "missing value"));
    }
    if let Some(rest) = raw.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or_else(|| err(line, "unterminated string"))?;
        if inner.contains('"') {
            return Err(err(line, "stray quote in string"));
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if let Some(rest) = raw.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated list"))?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let items = inner
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| err(line, format!("list entry `{}` is not a number", t.trim()))))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Value::List(items));
    }
    raw.parse::<f64>().map(|v| Value::Num(v, raw.to_string())).map_err(|_| err(line, format!("cannot parse value `{raw}`")))
}

fn lex(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut section: Option<String> = None;
    let mut out: BTreeMap<String, Entry> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| err(line, "malformed section header"))?.trim();
            if !SECTIONS.contains(&name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(line, format!("invalid key `{key}`")));
        }
        let full = match &section {
            Some(sec) => format!("{sec}.{key}"),
            None => key.to_string(),
        };
        let value = parse_value(value, line)?;
        if out.contains_key(&full) {
            return Err(err(line, format!("duplicate key at line {line}")));
        }
        out.insert(full, Entry { line, value });
    }
    Ok(out)
}

fn num(e: &Entry, key: &str) -> Result<f64> {
    match &e.value {
        Value::Num(v, _) if v.is_finite() => Ok(*v),
        Value::Num(..) => Err(err(e.line, format!("{key} must be finite"))),
        v => Err(err(e.line, format!("{key} expects a number, got a {}", v.kind()))),
    }
}

fn count(e: &Entry, key: &str) -> Result<usize> {
    match &e.value {
        Value::Num(_, text) => text.parse::<usize>().map_err(|_| err(e.line, format!("{key} expects a nonnegative integer, got `{text}`"))),
        v => Err(err(e.line, format!("{key} expects an integer, got a {}", v.kind()))),
    }
}

fn string<'a>(e: &'a Entry, key: &str) -> Result<&'a str> {
    match &e.value {
        Value::Str(s) => Ok(s),
        v => Err(err(e.line, format!("{key} expects a quoted string, got a {}", v.kind()))),
    }
}

fn list(e: &Entry, key: &str) -> Result<Vec<f64>> {
    match &e.value {
        Value::List(v) => Ok(v.clone()),
        v => Err(err(e.line, format!("{key} expects a list, got a {}", v.kind()))),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let entries = lex(text)?;
    let name_entry = entries.get("name").ok_or_else(|| err(0, "missing `name`"))?;
    let name = string(name_entry, "name")?;
    let id = ExperimentId::parse(name).ok_or_else(|| {
        let ids: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
        err(name_entry.line, format!("unknown experiment `{name}` (known: {})", ids.join(", ")))
    })?;
    let mut c = defaults(id);
    let allowed = accepted(id);
    for (key, e) in &entries {
        let known = GLOBALS.contains(&key.as_str()) || all_keys().any(|k| k == key);
        if !known {
            return Err(err(e.line, format!("unknown key `{key}`")));
        }
        if !GLOBALS.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
            return Err(err(e.line, format!("key `{key}` is not used by experiment {}", id.as_str())));
        }
        match key.as_str() {
            "name" => {}
            "seed" => c.seed = count(e, key)? as u64,
            "out_dir" => c.out_dir = PathBuf::from(string(e, key)?),
            "params.mu" => c.params.mu = num(e, key)?,
            "params.lambda" => c.params.lambda = num(e, key)?,
            "params.gamma" => c.params.gamma = num(e, key)?,
            "params.A" => c.params.cap_a = num(e, key)?,
            "params.rho_far" => c.params.rho_far = num(e, key)?,
            "grid.lx" => c.grid.lx = num(e, key)?,
            "grid.ly" => c.grid.ly = num(e, key)?,
            "grid.nx" => c.grid.nx = count(e, key)?,
            "grid.ny" => c.grid.ny = count(e, key)?,
            "ic.preset" => {
                let s = string(e, key)?;
                c.ic.preset = Preset::parse(s).ok_or_else(|| err(e.line, format!("unknown preset `{s}`")))?;
            }
            "ic.amplitude" => c.ic.amplitude = num(e, key)?,
            "ic.width" => c.ic.width = num(e, key)?,
            "ic.center_x" => c.ic.center_x = num(e, key)?,
            "ic.center_y" => c.ic.center_y = num(e, key)?,
            "ic.velocity" => c.ic.velocity = num(e, key)?,
            "run.t_end" => c.t_end = num(e, key)?,
            "run.sample_every" => c.sample_every = num(e, key)?,
            "run.nu_list" => c.nu_list = Some(list(e, key)?),
            "run.fit_window" => {
                let w = list(e, key)?;
                if w.len() != 2 {
                    return Err(err(e.line, "fit_window expects [t_lo, t_hi]"));
                }
                c.fit_window = (w[0], w[1]);
            }
            "run.cfl" => c.cfl = num(e, key)?,
            "run.checkpoint_every" => c.checkpoint_every = num(e, key)?,
            "run.radius" => c.radius = num(e, key)?,
            "run.cases" => c.cases = count(e, key)?,
            "run.levels" => c.levels = count(e, key)?,
            "run.dt_h2" => c.dt_h2 = num(e, key)?,
            "run.moment_a" => c.moment_a = num(e, key)?,
            _ => unreachable!("key table out of sync: {key}"),
        }
    }
    let line_of = |keys: &[&str]| keys.iter().find_map(|k| entries.get(*k).map(|e| e.line)).unwrap_or(0);
    validate(&c).map_err(|(keys, msg)| err(line_of(&keys), msg))?;
    Ok(c)
}

fn all_keys() -> impl Iterator<Item = &'static str> {
    ExperimentId::ALL.into_iter().flat_map(|id| accepted(id).iter().copied())
}

type Invalid = (Vec<&'static str>, String);

fn validate(c: &ExperimentConfig) -> std::result::Result<(), Invalid> {
    let bad = |keys: &[&'static str], msg: String| Err((keys.to_vec(), msg));
    let id = c.name;
    let p = &c.params;
    let pkeys = ["params.lambda", "params.mu", "params.gamma", "params.A", "params.rho_far"];
    if let Err(e) = make_params(p.mu, p.lambda, p.gamma, p.cap_a, p.rho_far) {
        return bad(&pkeys, e.to_string());
    }
    let gkeys = ["grid.nx", "grid.ny", "grid.lx", "grid.ly"];
    if let Err(e) = make_grid(c.grid.lx, c.grid.ly, c.grid.nx, c.grid.ny) {
        return bad(&gkeys, e.to_string());
    }
    let uses = |k: &str| accepted(id).contains(&k);
    if uses("run.t_end") && !(c.t_end > 0.0) {
        return bad(&["run.t_end"], format!("t_end must be positive, got {}", c.t_end));
    }
    if uses("run.sample_every") && !(c.sample_every > 0.0 && c.sample_every <= c.t_end) {
        return bad(&["run.sample_every"], format!("sample_every must lie in (0, t_end], got {}", c.sample_every));
    }
    if uses("run.cfl") && !(c.cfl > 0.0 && c.cfl <= 1.0) {
        return bad(&["run.cfl"], format!("cfl must lie in (0, 1], got {}", c.cfl));
    }
    if uses("run.checkpoint_every") && !(c.checkpoint_every > 0.0) {
        return bad(&["run.checkpoint_every"], format!("checkpoint_every must be positive, got {}", c.checkpoint_every));
    }
    if uses("run.fit_window") && !(c.fit_window.0 >= 0.0 && c.fit_window.1 > c.fit_window.0) {
        return bad(&["run.fit_window"], format!("fit_window [{}, {}] must satisfy 0 <= t_lo < t_hi", c.fit_window.0, c.fit_window.1));
    }
    if uses("run.radius") && !(c.radius > 0.0) {
        return bad(&["run.radius"], format!("radius must be positive, got {}", c.radius));
    }
    if uses("run.cases") && c.cases == 0 {
        return bad(&["run.cases"], "cases must be positive".into());
    }
    if uses("run.levels") && c.levels < 2 {
        return bad(&["run.levels"], format!("a refinement study needs at least 2 levels, got {}", c.levels));
    }
    if uses("run.dt_h2") && !(c.dt_h2 > 0.0) {
        return bad(&["run.dt_h2"], format!("dt_h2 must be positive, got {}", c.dt_h2));
    }
    if uses("run.moment_a") && !(c.moment_a > 1.0) {
        return bad(&["run.moment_a"], format!("moment exponent must satisfy a > 1, got {}", c.moment_a));
    }
    if uses("run.nu_list") {
        let list = c.nu_list.as_deref().unwrap_or(&[]);
        if list.is_empty() {
            return bad(&["run.nu_list"], "nu_list must not be empty".into());
        }
        if let Some(w) = list.windows(2).find(|w| !(w[1] > w[0])) {
            return bad(&["run.nu_list"], format!("nu_list must be strictly increasing ({} then {})", w[0], w[1]));
        }
        for &nu in list {
            if let Err(e) = make_params(p.mu, nu - 2.0 * p.mu, p.gamma, p.cap_a, p.rho_far) {
                return bad(&["run.nu_list"], format!("nu = {nu}: {e}"));
            }
        }
    }
    if uses("ic.preset") {
        let ic = &c.ic;
        if !(ic.width > 0.0) {
            return bad(&["ic.width"], format!("width must be positive, got {}", ic.width));
        }
        if !(ic.amplitude >= 0.0) {
            return bad(&["ic.amplitude"], format!("amplitude must be nonnegative, got {}", ic.amplitude));
        }
        let vacuum = p.rho_far == 0.0;
        match ic.preset {
            Preset::PerturbedConstant if vacuum => {
                return bad(&["ic.preset", "params.rho_far"], "perturbed_constant needs rho_far > 0".into());
            }
            Preset::PerturbedConstant if ic.amplitude * (-2f64).exp() > p.rho_far => {
                return bad(&["ic.amplitude"], format!("amplitude {} makes the perturbed density negative", ic.amplitude));
            }
            Preset::GaussBump | Preset::ShearDivfree | Preset::Compressive if vacuum && ic.amplitude == 0.0 => {
                return bad(&["ic.amplitude"], "vacuum data needs a positive amplitude".into());
            }
            _ => {}
        }
    }
    match id {
        ExperimentId::VacuumDecay if c.params.rho_far != 0.0 => bad(&["params.rho_far"], "vacuum_decay needs rho_far = 0".into()),
        ExperimentId::NonvacuumLongtime if !(c.params.rho_far > 0.0) => bad(&["params.rho_far"], "nonvacuum_longtime needs rho_far > 0".into()),
        ExperimentId::NuSweepLimit if c.ic.preset != Preset::ShearDivfree => {
            bad(&["ic.preset"], "nu_sweep_limit compares against the limit system and needs divergence-free data (shear_divfree)".into())
        }
        _ => Ok(()),
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Canonical document holding every key the experiment reads, with
/// defaults filled in. Parsing it yields the same configuration.
pub fn echo(c: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "name = \"{}\"", c.name.as_str());
    let _ = writeln!(s, "seed = {}", c.seed);
    let _ = writeln!(s, "out_dir = \"{}\"", c.out_dir.display());
    s.push_str(&echo_body(c));
    s
}

/// [`echo`] without `out_dir`; the run id hashes this text.
pub fn identity_text(c: &ExperimentConfig) -> String {
    format!("name = \"{}\"\nseed = {}\n{}", c.name.as_str(), c.seed, echo_body(c))
}

fn echo_body(c: &ExperimentConfig) -> String {
    let mut s = String::new();
    let keys = accepted(c.name);
    for sec in SECTIONS {
        let in_sec: Vec<&str> = keys.iter().filter_map(|k| k.strip_prefix(sec).and_then(|r| r.strip_prefix('.'))).collect();
        if in_sec.is_empty() {
            continue;
        }
        let _ = writeln!(s, "\n[{sec}]");
        for key in in_sec {
            let v = match (sec, key) {
                ("params", "mu") => fmt_num(c.params.mu),
                ("params", "lambda") => fmt_num(c.params.lambda),
                ("params", "gamma") => fmt_num(c.params.gamma),
                ("params", "A") => fmt_num(c.params.cap_a),
                ("params", "rho_far") => fmt_num(c.params.rho_far),
                ("grid", "lx") => fmt_num(c.grid.lx),
                ("grid", "ly") => fmt_num(c.grid.ly),
                ("grid", "nx") => c.grid.nx.to_string(),
                ("grid", "ny") => c.grid.ny.to_string(),
                ("ic", "preset") => format!("\"{}\"", c.ic.preset.as_str()),
                ("ic", "amplitude") => fmt_num(c.ic.amplitude),
                ("ic", "width") => fmt_num(c.ic.width),
                ("ic", "center_x") => fmt_num(c.ic.center_x),
                ("ic", "center_y") => fmt_num(c.ic.center_y),
                ("ic", "velocity") => fmt_num(c.ic.velocity),
                ("run", "t_end") => fmt_num(c.t_end),
                ("run", "sample_every") => fmt_num(c.sample_every),
                ("run", "nu_list") => {
                    let l: Vec<String> = c.nu_list.as_deref().unwrap_or(&[]).iter().map(|&v| fmt_num(v)).collect();
                    format!("[{}]", l.join(", "))
                }
                ("run", "fit_window") => format!("[{}, {}]", fmt_num(c.fit_window.0), fmt_num(c.fit_window.1)),
                ("run", "cfl") => fmt_num(c.cfl),
                ("run", "checkpoint_every") => fmt_num(c.checkpoint_every),
                ("run", "radius") => fmt_num(c.radius),
                ("run", "cases") => c.cases.to_string(),
                ("run", "levels") => c.levels.to_string(),
                ("run", "dt_h2") => fmt_num(c.dt_h2),
                ("run", "moment_a") => fmt_num(c.moment_a),
                _ => unreachable!("key table out of sync: {sec}.{key}"),
            };
            let _ = writeln!(s, "{key} = {v}");
        }
    }
    s
}
