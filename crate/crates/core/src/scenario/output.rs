//! On-disk formats: `series.csv`, `.grid` snapshots and `manifest.json`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::Termination;
use crate::error::{Error, Result};
use crate::grid::Field;

pub const SERIES_HEADER: &str = "t,species,mass,min,max,l2,linf,neg_l2,M,dMdt_bound";
pub const GRID_MAGIC: &str = "GRIDv1";

/// Appends one row per species per record.
pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut writer = Self {
            out: BufWriter::new(file),
            path,
        };
        writer.line(SERIES_HEADER)?;
        Ok(writer)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        for i in 0..r.mass.len() {
            let row = format!(
                "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t,
                i + 1,
                r.mass[i],
                r.min[i],
                r.max[i],
                r.l2[i],
                r.linf[i],
                r.neg_l2[i],
                r.second_moment,
                r.dmdt_bound
            );
            self.line(&row)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }

    fn line(&mut self, s: &str) -> Result<()> {
        self.out
            .write_all(s.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// One parsed `series.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    /// 1-based.
    pub species: usize,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub l2: f64,
    pub linf: f64,
    pub neg_l2: f64,
    pub second_moment: f64,
    pub dmdt_bound: f64,
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_owned(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(SERIES_HEADER) {
        return Err(bad("missing series header".into()));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 10 {
                return Err(bad(format!("row {} has {} columns", n + 1, cols.len())));
            }
            let num = |i: usize| {
                cols[i]
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {}: bad number `{}`", n + 1, cols[i])))
            };
            Ok(SeriesRow {
                t: num(0)?,
                species: cols[1]
                    .parse()
                    .map_err(|_| bad(format!("row {}: bad species `{}`", n + 1, cols[1])))?,
                mass: num(2)?,
                min: num(3)?,
                max: num(4)?,
                l2: num(5)?,
                linf: num(6)?,
                neg_l2: num(7)?,
                second_moment: num(8)?,
                dmdt_bound: num(9)?,
            })
        })
        .collect()
}

/// Contents of a `.grid` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    /// 1 for one-dimensional grids.
    pub ny: usize,
    pub lx: f64,
    /// 0 for one-dimensional grids.
    pub ly: f64,
    pub t: f64,
    /// 1-based.
    pub species: usize,
    /// Row-major, `ny` rows of `nx` values.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(field: &Field, t: f64, species: usize) -> Self {
        let g = field.grid();
        let (nx, ny, lx, ly) = match g.dim() {
            1 => (g.points()[0], 1, g.half_lengths()[0], 0.0),
            _ => (g.points()[0], g.points()[1], g.half_lengths()[0], g.half_lengths()[1]),
        };
        Self {
            nx,
            ny,
            lx,
            ly,
            t,
            species,
            values: field.values().to_vec(),
        }
    }
}

/// Snapshot file name for 1-based `species` at step `step`.
pub fn snapshot_name(species: usize, step: u64) -> String {
    format!("u{species}_{step}.grid")
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(
        out,
        "{GRID_MAGIC} {} {} {:e} {:e} {:e} {}",
        s.nx, s.ny, s.lx, s.ly, s.t, s.species
    )
    .map_err(io)?;
    let mut payload = Vec::with_capacity(8 * s.values.len());
    for v in &s.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&payload).map_err(io)?;
    out.flush().map_err(io)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_owned(),
        message,
    };
    let mut reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut header = Vec::new();
    reader
        .read_until(b'\n', &mut header)
        .map_err(|e| Error::io(path, e))?;
    if header.last() != Some(&b'\n') {
        return Err(bad("header is not newline-terminated".into()));
    }
    let header = std::str::from_utf8(&header[..header.len() - 1]).map_err(|_| bad("header is not UTF-8".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.first() != Some(&GRID_MAGIC) {
        return Err(bad(format!("expected `{GRID_MAGIC}` magic")));
    }
    if parts.len() != 7 {
        return Err(bad(format!("header has {} fields, expected 7", parts.len())));
    }
    let int = |i: usize, what: &str| parts[i].parse::<usize>().map_err(|_| bad(format!("bad {what} `{}`", parts[i])));
    let real = |i: usize, what: &str| parts[i].parse::<f64>().map_err(|_| bad(format!("bad {what} `{}`", parts[i])));
    let nx = int(1, "nx")?;
    let ny = int(2, "ny")?;
    let lx = real(3, "Lx")?;
    let ly = real(4, "Ly")?;
    let t = real(5, "t")?;
    let species = int(6, "species")?;
    let count = nx
        .checked_mul(ny)
        .ok_or_else(|| bad("grid size overflows".into()))?;
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(path, e))?;
    if payload.len() != 8 * count {
        return Err(bad(format!(
            "payload has {} bytes, expected {} for {nx}x{ny}",
            payload.len(),
            8 * count
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks are 8 bytes")))
        .collect();
    Ok(Snapshot {
        nx,
        ny,
        lx,
        ly,
        t,
        species,
        values,
    })
}

/// Termination details recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationRecord {
    /// `completed` or `blowup`.
    pub reason: String,
    /// Blow-up cause, when there is one.
    pub cause: Option<serde_json::Value>,
    pub steps: u64,
    pub wall_start_unix: f64,
    pub wall_end_unix: f64,
    pub wall_seconds: f64,
}

impl TerminationRecord {
    pub fn new(termination: &Termination, steps: u64, wall_start_unix: f64, wall_end_unix: f64) -> Self {
        let (reason, cause) = match termination {
            Termination::Completed => ("completed", None),
            Termination::Blowup { cause } => (
                "blowup",
                Some(serde_json::to_value(cause).expect("causes serialize")),
            ),
        };
        Self {
            reason: reason.to_owned(),
            cause,
            steps,
            wall_start_unix,
            wall_end_unix,
            wall_seconds: wall_end_unix - wall_start_unix,
        }
    }

    pub fn is_blowup(&self) -> bool {
        self.reason == "blowup"
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub t_final: f64,
    pub termination: TerminationRecord,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifests serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Snapshot {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}
