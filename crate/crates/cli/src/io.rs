//! Output files.
//!
//! `timeseries.csv` has the columns
//! `t, normZ2, dissipation, c_min, c_max, theta_min, theta_max, total_solute, solid_v2, div_inf`,
//! one row per recorded time level. `energy.csv` holds the per-step energy
//! terms `step, t, growth, forcing, dissipation, penalty_work`.
//!
//! A field snapshot is a plain-text header of `key value` lines (`nx`, `ny`,
//! `lx`, `ly`, `t`, `field`, `cols`, `rows`) followed, in ASCII mode, by a line
//! `data` and one line of space-separated values per grid row, bottom row
//! first. In binary mode the header goes to `<prefix>_<field>.hdr` and the
//! values to `<prefix>_<field>.bin` as little-endian `f64` in the same order.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use alloyfreeze_core::{
    EnergyTerms, Grid, ScalarField, State, StepRecord, TrajectoryStats, VectorField,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SnapshotFormat;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const ENERGY_FILE: &str = "energy.csv";
const FIELDS: [&str; 5] = ["c", "theta", "u", "v", "p"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(file_err(path))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

pub fn write_csv<S: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = S>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub t: f64,
    #[serde(rename = "normZ2")]
    pub norm_z2: f64,
    pub dissipation: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub total_solute: f64,
    pub solid_v2: f64,
    pub div_inf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub step: usize,
    pub t: f64,
    pub growth: f64,
    pub forcing: f64,
    pub dissipation: f64,
    pub penalty_work: f64,
}

/// Writes `timeseries.csv` and `energy.csv` into `dir`.
pub fn write_trajectory(dir: &Path, stats: &TrajectoryStats<f64>) -> Result<(), IoError> {
    write_csv(
        &dir.join(TIMESERIES_FILE),
        stats.records.iter().map(|r| TimeseriesRow {
            t: r.t,
            norm_z2: r.norm_z2,
            dissipation: r.dissipation,
            c_min: r.c_min,
            c_max: r.c_max,
            theta_min: r.theta_min,
            theta_max: r.theta_max,
            total_solute: r.total_solute,
            solid_v2: r.solid_v2,
            div_inf: r.div_inf,
        }),
    )?;
    write_csv(
        &dir.join(ENERGY_FILE),
        stats.records.iter().enumerate().filter_map(|(k, r)| {
            r.energy.map(|e| EnergyRow {
                step: k,
                t: r.t,
                growth: e.growth,
                forcing: e.forcing,
                dissipation: e.dissipation,
                penalty_work: e.penalty_work,
            })
        }),
    )
}

/// Reads a trajectory written by [`write_trajectory`]. A missing `energy.csv`
/// leaves the energy terms empty.
pub fn read_trajectory(dir: &Path) -> Result<TrajectoryStats<f64>, IoError> {
    let rows: Vec<TimeseriesRow> = read_csv(&dir.join(TIMESERIES_FILE))?;
    let mut records: Vec<StepRecord<f64>> = rows
        .into_iter()
        .map(|r| StepRecord {
            t: r.t,
            norm_z2: r.norm_z2,
            dissipation: r.dissipation,
            c_min: r.c_min,
            c_max: r.c_max,
            theta_min: r.theta_min,
            theta_max: r.theta_max,
            total_solute: r.total_solute,
            solid_v2: r.solid_v2,
            div_inf: r.div_inf,
            energy: None,
        })
        .collect();
    let energy_path = dir.join(ENERGY_FILE);
    if energy_path.exists() {
        let rows: Vec<EnergyRow> = read_csv(&energy_path)?;
        for e in rows {
            let rec = records.get_mut(e.step).ok_or_else(|| IoError::Malformed {
                path: energy_path.clone(),
                reason: format!("step {} has no time level", e.step),
            })?;
            rec.energy = Some(EnergyTerms {
                growth: e.growth,
                forcing: e.forcing,
                dissipation: e.dissipation,
                penalty_work: e.penalty_work,
            });
        }
    }
    Ok(TrajectoryStats { records })
}

struct Header {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    t: f64,
    field: String,
    cols: usize,
    rows: usize,
}

impl Header {
    fn render(&self) -> String {
        format!(
            "nx {}\nny {}\nlx {}\nly {}\nt {}\nfield {}\ncols {}\nrows {}\n",
            self.nx, self.ny, self.lx, self.ly, self.t, self.field, self.cols, self.rows
        )
    }
}

fn field_data<'a>(
    state: &'a State<f64>,
    field: &str,
    grid: &Grid<f64>,
) -> (&'a [f64], usize, usize) {
    match field {
        "c" => (state.c.as_slice(), grid.nx, grid.ny),
        "theta" => (state.theta.as_slice(), grid.nx, grid.ny),
        "u" => (state.vel.u_slice(), grid.nx + 1, grid.ny),
        "v" => (state.vel.v_slice(), grid.nx, grid.ny + 1),
        _ => (state.p.as_slice(), grid.nx, grid.ny),
    }
}

fn snapshot_path(prefix: &Path, field: &str, ext: &str) -> PathBuf {
    let name = prefix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    prefix.with_file_name(format!("{name}_{field}.{ext}"))
}

/// Writes one file (two in binary mode) per field of `state`.
pub fn write_snapshot(
    prefix: &Path,
    state: &State<f64>,
    grid: &Grid<f64>,
    format: SnapshotFormat,
) -> Result<(), IoError> {
    for field in FIELDS {
        let (data, cols, rows) = field_data(state, field, grid);
        let header = Header {
            nx: grid.nx,
            ny: grid.ny,
            lx: grid.lx,
            ly: grid.ly,
            t: state.t,
            field: field.to_string(),
            cols,
            rows,
        }
        .render();
        match format {
            SnapshotFormat::Ascii => {
                let path = snapshot_path(prefix, field, "txt");
                let file = fs::File::create(&path).map_err(file_err(&path))?;
                let mut w = BufWriter::new(file);
                let mut body = header;
                body.push_str("data\n");
                for row in data.chunks(cols) {
                    let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    body.push_str(&line.join(" "));
                    body.push('\n');
                }
                w.write_all(body.as_bytes()).map_err(file_err(&path))?;
                w.flush().map_err(file_err(&path))?;
            }
            SnapshotFormat::Binary => {
                write_text(&snapshot_path(prefix, field, "hdr"), &header)?;
                let path = snapshot_path(prefix, field, "bin");
                let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
                fs::write(&path, bytes).map_err(file_err(&path))?;
            }
        }
    }
    Ok(())
}

fn parse_header(path: &Path, lines: &mut impl Iterator<Item = String>) -> Result<Header, IoError> {
    let bad = |reason: String| IoError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut get = |key: &str| -> Result<String, IoError> {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing `{key}`")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(bad(format!("expected `{key}`, found `{line}`"))),
        }
    };
    let num = |key: &str, v: String| {
        v.parse::<f64>()
            .map_err(|_| bad(format!("`{key}` is not a number")))
    };
    let int = |key: &str, v: String| {
        v.parse::<usize>()
            .map_err(|_| bad(format!("`{key}` is not an integer")))
    };
    Ok(Header {
        nx: int("nx", get("nx")?)?,
        ny: int("ny", get("ny")?)?,
        lx: num("lx", get("lx")?)?,
        ly: num("ly", get("ly")?)?,
        t: num("t", get("t")?)?,
        field: get("field")?,
        cols: int("cols", get("cols")?)?,
        rows: int("rows", get("rows")?)?,
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>, IoError> {
    let file = fs::File::open(path).map_err(file_err(path))?;
    BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(file_err(path))
}

fn read_field(prefix: &Path, field: &str, grid: &Grid<f64>) -> Result<(Vec<f64>, f64), IoError> {
    let ascii = snapshot_path(prefix, field, "txt");
    let (header, data, path) = if ascii.exists() {
        let lines = read_lines(&ascii)?;
        let mut it = lines.into_iter();
        let header = parse_header(&ascii, &mut it)?;
        if it.next().as_deref() != Some("data") {
            return Err(IoError::Malformed {
                path: ascii,
                reason: "missing `data` line".into(),
            });
        }
        let mut data = Vec::with_capacity(header.cols * header.rows);
        for line in it {
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| IoError::Malformed {
                    path: ascii.clone(),
                    reason: format!("bad value `{tok}`"),
                })?);
            }
        }
        (header, data, ascii)
    } else {
        let hdr = snapshot_path(prefix, field, "hdr");
        let header = parse_header(&hdr, &mut read_lines(&hdr)?.into_iter())?;
        let bin = snapshot_path(prefix, field, "bin");
        let bytes = fs::read(&bin).map_err(file_err(&bin))?;
        if bytes.len() % 8 != 0 {
            return Err(IoError::Malformed {
                path: bin,
                reason: "length is not a multiple of 8".into(),
            });
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect();
        (header, data, bin)
    };
    let (_, cols, rows) = field_data(&State::zeros(grid), field, grid);
    if header.nx != grid.nx || header.ny != grid.ny || header.cols != cols || header.rows != rows {
        return Err(IoError::Malformed {
            path,
            reason: format!(
                "shape {}x{} does not match the configured grid",
                header.nx, header.ny
            ),
        });
    }
    if header.field != field || data.len() != cols * rows {
        return Err(IoError::Malformed {
            path,
            reason: format!(
                "expected {} values of `{field}`, found {}",
                cols * rows,
                data.len()
            ),
        });
    }
    Ok((data, header.t))
}

/// Reads a snapshot written by [`write_snapshot`] in either format.
pub fn read_snapshot(prefix: &Path, grid: &Grid<f64>) -> Result<State<f64>, IoError> {
    let shape_err = |e: alloyfreeze_core::Error| IoError::Malformed {
        path: prefix.to_path_buf(),
        reason: e.to_string(),
    };
    let (c, t) = read_field(prefix, "c", grid)?;
    let (theta, _) = read_field(prefix, "theta", grid)?;
    let (u, _) = read_field(prefix, "u", grid)?;
    let (v, _) = read_field(prefix, "v", grid)?;
    let (p, _) = read_field(prefix, "p", grid)?;
    Ok(State {
        c: ScalarField::from_vec(grid.nx, grid.ny, c).map_err(shape_err)?,
        theta: ScalarField::from_vec(grid.nx, grid.ny, theta).map_err(shape_err)?,
        vel: VectorField::from_parts(grid.nx, grid.ny, u, v).map_err(shape_err)?,
        p: ScalarField::from_vec(grid.nx, grid.ny, p).map_err(shape_err)?,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &Grid<f64>) -> State<f64> {
        let mut s = State::zeros(grid);
        s.c = grid.scalar_from_fn(|x, y| 0.1 + x * y / 3.0);
        s.theta = grid.scalar_from_fn(|x, y| (x - y).sin());
        s.vel = grid.vector_from_fn(|x, y| x * y, |x, y| x - y);
        s.t = 0.37;
        s
    }

    #[test]
    fn snapshots_round_trip_in_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(6, 4, 2.0, 1.0).unwrap();
        let s = sample(&grid);
        for (name, fmt) in [("a", SnapshotFormat::Ascii), ("b", SnapshotFormat::Binary)] {
            let prefix = dir.path().join(name);
            write_snapshot(&prefix, &s, &grid, fmt).unwrap();
            assert_eq!(read_snapshot(&prefix, &grid).unwrap(), s);
        }
        let text = fs::read_to_string(dir.path().join("a_u.txt")).unwrap();
        assert!(text.starts_with("nx 6\nny 4\nlx 2\nly 1\nt 0.37\nfield u\ncols 7\nrows 4\ndata\n"));
    }

    #[test]
    fn snapshot_on_wrong_grid_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(6, 4, 2.0, 1.0).unwrap();
        let prefix = dir.path().join("s");
        write_snapshot(&prefix, &sample(&grid), &grid, SnapshotFormat::Ascii).unwrap();
        let other = Grid::new(5, 4, 2.0, 1.0).unwrap();
        assert!(matches!(
            read_snapshot(&prefix, &other),
            Err(IoError::Malformed { .. })
        ));
    }
}
