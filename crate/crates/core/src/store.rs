//! Binary checkpoints and CSV time series.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_ECMA_182};

use crate::csolve::robin_ratio;
use crate::diag::{DiagRecord, NormSpec};
use crate::error::{Error, Result};
use crate::model::{make_grid, make_params, Field, FluidParams, Loc, State, Velocity};

pub const MAGIC: &[u8; 8] = b"HPBVNS01";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 3 * 4 + 9 * 8;
const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_ECMA_182);

fn ck_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint { path: path.to_path_buf(), msg: msg.into() }
}

/// Writes `state`, the parameters and the density floor in the fixed
/// little-endian layout, through a temporary file renamed into place.
pub fn write_checkpoint(state: &State<f64>, params: &FluidParams<f64>, rho_floor: f64, path: &Path) -> Result<()> {
    state.validate()?;
    let g = state.grid();
    let mut payload = Vec::with_capacity(8 * (state.rho.data().len() + state.vel.u.data().len() + state.vel.v.data().len()));
    for f in [&state.rho, &state.vel.u, &state.vel.v] {
        for v in f.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut head = Vec::with_capacity(HEADER_LEN);
    head.extend_from_slice(MAGIC);
    for n in [VERSION, g.nx() as u32, g.ny() as u32] {
        head.extend_from_slice(&n.to_le_bytes());
    }
    let block = [g.lx(), g.ly(), state.t, params.mu(), params.lambda(), params.gamma(), params.cap_a(), params.rho_far(), rho_floor];
    for v in block {
        head.extend_from_slice(&v.to_le_bytes());
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| ck_err(path, format!("cannot create temporary file: {e}")))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        w.write_all(&head)?;
        w.write_all(&payload)?;
        w.write_all(&CRC64.checksum(&payload).to_le_bytes())?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ck_err(path, format!("rename failed: {}", e.error)))?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn u32(&mut self) -> u32 {
        let v = u32::from_le_bytes(self.buf[self.at..self.at + 4].try_into().unwrap());
        self.at += 4;
        v
    }
    fn f64(&mut self) -> f64 {
        let v = f64::from_le_bytes(self.buf[self.at..self.at + 8].try_into().unwrap());
        self.at += 8;
        v
    }
    fn f64s(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Contents of a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: State<f64>,
    pub params: FluidParams<f64>,
    pub rho_floor: f64,
}

/// Reads and validates a checkpoint. The wall ghost row is rebuilt from the
/// slip condition.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut buf = Vec::new();
    File::open(path).map_err(|e| ck_err(path, e.to_string()))?.read_to_end(&mut buf)?;
    if buf.len() < 8 || &buf[..8] != MAGIC {
        return Err(ck_err(path, "not a checkpoint (bad magic)"));
    }
    if buf.len() < HEADER_LEN + 8 {
        return Err(ck_err(path, format!("checksum mismatch: file truncated to {} bytes", buf.len())));
    }
    let mut c = Cursor { buf: &buf, at: 8 };
    let version = c.u32();
    if version != VERSION {
        return Err(ck_err(path, format!("unsupported version {version} (expected {VERSION})")));
    }
    let (nx, ny) = (c.u32() as usize, c.u32() as usize);
    let [lx, ly, t, mu, lambda, gamma, cap_a, rho_far, rho_floor]: [f64; 9] = c.f64s(9).try_into().unwrap();
    let counts = [nx * ny, (nx + 1) * ny, nx * (ny + 1)];
    let want = HEADER_LEN + 8 * counts.iter().sum::<usize>() + 8;
    if buf.len() != want {
        let what = if buf.len() < want { "file truncated" } else { "trailing bytes" };
        return Err(ck_err(path, format!("checksum mismatch: {what} ({} bytes, header implies {want})", buf.len())));
    }
    let payload = &buf[HEADER_LEN..want - 8];
    let stored = u64::from_le_bytes(buf[want - 8..].try_into().unwrap());
    if CRC64.checksum(payload) != stored {
        return Err(ck_err(path, "checksum mismatch: payload corrupted"));
    }
    let grid = make_grid(lx, ly, nx, ny)?;
    let params = make_params(mu, lambda, gamma, cap_a, rho_far)?;
    if !(rho_floor > 0.0) {
        return Err(ck_err(path, format!("density floor must be positive, got {rho_floor}")));
    }
    let rho = Field::from_vec(grid, Loc::Cell, c.f64s(counts[0]))?;
    let u = Field::from_vec(grid, Loc::XFace, c.f64s(counts[1]))?;
    let v = Field::from_vec(grid, Loc::YFace, c.f64s(counts[2]))?;
    let r = robin_ratio(cap_a, grid.h());
    let wall_ghost = u.row(0).iter().map(|&x| r * x).collect();
    let state = State { rho, vel: Velocity { u, v, wall_ghost }, t };
    state.validate()?;
    Ok(Checkpoint { state, params, rho_floor })
}

/// Column layout of a series file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSchema {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

impl SeriesSchema {
    pub fn from_norms(norms: &NormSpec<f64>) -> Self {
        SeriesSchema { p: norms.p.clone(), r: norms.r.clone() }
    }

    fn label(x: f64) -> String {
        if x.is_infinite() {
            "inf".into()
        } else {
            format!("{x}")
        }
    }

    /// Column names with their units.
    pub fn columns(&self) -> Vec<(String, &'static str)> {
        let mut c: Vec<(String, &'static str)> = [
            ("t", "time"),
            ("sigma_t", "1"),
            ("mass", "mass"),
            ("energy", "energy"),
            ("rho_max", "density"),
            ("rho_min", "density"),
            ("grad_u_l2", "1/time"),
        ]
        .iter()
        .map(|&(a, b)| (a.to_string(), b))
        .collect();
        c.extend(self.p.iter().map(|&p| (format!("grad_u_l{}", Self::label(p)), "1/time")));
        c.push(("div_u_l2".into(), "1/time"));
        c.extend(self.r.iter().map(|&r| (format!("p_l{}", Self::label(r)), "pressure")));
        for (a, b) in [
            ("g_l2", "pressure"),
            ("omega_l2", "1/time"),
            ("sqrt_rho_udot_l2", "momentum/time"),
            ("mass_ball", "mass"),
            ("moment_a", "mass"),
            ("bc_res", "1/time"),
            ("sigma_grad_u_sq", "1/time^2"),
            ("sigma_udot_sq", "energy/time^2"),
            ("t2_udot_sq", "energy"),
        ] {
            c.push((a.into(), b));
        }
        c
    }

    fn row(&self, r: &DiagRecord<f64>) -> Result<Vec<Option<f64>>> {
        let ps: Vec<f64> = r.grad_u_lp.iter().map(|q| q.0).collect();
        let rs: Vec<f64> = r.p_lr.iter().map(|q| q.0).collect();
        if ps != self.p || rs != self.r {
            return Err(Error::Series(format!("schema drift: record exponents p = {ps:?}, r = {rs:?} against {:?}, {:?}", self.p, self.r)));
        }
        let mut v = vec![Some(r.t), Some(r.sigma_t), Some(r.mass), Some(r.energy), Some(r.rho_max), Some(r.rho_min), Some(r.grad_u_l2)];
        v.extend(r.grad_u_lp.iter().map(|q| Some(q.1)));
        v.push(Some(r.div_u_l2));
        v.extend(r.p_lr.iter().map(|q| Some(q.1)));
        let udot_sq = r.sqrt_rho_udot_l2.map(|x| x * x);
        v.extend([
            Some(r.g_l2),
            Some(r.omega_l2),
            r.sqrt_rho_udot_l2,
            r.mass_ball,
            Some(r.moment_a),
            Some(r.bc_res),
            Some(r.sigma_t * r.grad_u_l2 * r.grad_u_l2),
            udot_sq.map(|q| r.sigma_t * q),
            udot_sq.map(|q| r.t * r.t * q),
        ]);
        Ok(v)
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

/// Append-only CSV writer with a header row and a units row.
pub struct SeriesWriter {
    path: PathBuf,
    schema: SeriesSchema,
    out: csv::Writer<File>,
    last_t: Option<f64>,
}

impl SeriesWriter {
    /// Creates (or truncates) `path` and writes the two header rows.
    pub fn create(path: &Path, schema: SeriesSchema) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(file);
        let cols = schema.columns();
        out.write_record(cols.iter().map(|c| c.0.as_str())).map_err(csv_err)?;
        let mut units: Vec<String> = cols.iter().map(|c| c.1.to_string()).collect();
        units[0] = format!("# {}", units[0]);
        out.write_record(&units).map_err(csv_err)?;
        out.flush()?;
        Ok(SeriesWriter { path: path.to_path_buf(), schema, out, last_t: None })
    }

    /// Reopens an existing series for a resumed run, dropping rows at or
    /// after `t_restart` so the resumed run can write them again.
    pub fn resume(path: &Path, schema: SeriesSchema, t_restart: f64) -> Result<Self> {
        let table = read_series(path)?;
        let names: Vec<String> = schema.columns().into_iter().map(|c| c.0).collect();
        if table.columns != names {
            return Err(Error::Series(format!("{}: columns differ from the run's schema", path.display())));
        }
        let kept: Vec<Vec<Option<f64>>> = table.rows.into_iter().filter(|r| r[0].is_some_and(|t| t < t_restart)).collect();
        let mut w = Self::create(path, schema)?;
        for row in &kept {
            w.out.write_record(row.iter().map(|&v| fmt_cell(v))).map_err(csv_err)?;
        }
        w.out.flush()?;
        w.last_t = kept.last().and_then(|r| r[0]);
        Ok(w)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &DiagRecord<f64>) -> Result<()> {
        if let Some(last) = self.last_t {
            if !(record.t > last) {
                return Err(Error::Series(format!("time {} does not follow {last}", record.t)));
            }
        }
        let row = self.schema.row(record)?;
        self.out.write_record(row.iter().map(|&v| fmt_cell(v))).map_err(csv_err)?;
        self.out.flush()?;
        self.last_t = Some(record.t);
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Series(e.to_string())
}

/// Parsed series file; absent entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl SeriesTable {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// `(t, value)` pairs of one column, skipping absent entries.
    pub fn pairs(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let col = self.column(name)?;
        Some(self.rows.iter().zip(col).filter_map(|(r, v)| Some((r[0]?, v?))).collect())
    }
}

pub fn read_series(path: &Path) -> Result<SeriesTable> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_path(path).map_err(csv_err)?;
    let columns: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if k == 0 && rec.get(0).is_some_and(|s| s.starts_with('#')) {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for cell in rec.iter() {
            row.push(if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|e| Error::Series(format!("row {}: {e} in {cell:?}", k + 1)))?)
            });
        }
        rows.push(row);
    }
    Ok(SeriesTable { columns, rows })
}
