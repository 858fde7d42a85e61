//! CSV input and output.
//!
//! Path files hold one observation per row: a time column followed by `d`
//! value columns. An optional header row is recognised by a non-numeric
//! first row, and lines starting with `#` are skipped, so files written by
//! this crate (which start with `#` provenance lines) read back directly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nsk_core::hom::KernelSurface;
use nsk_core::{KernelTrajectory, PiecewiseLinearPath};

use crate::error::{Error, Result};

/// Provenance lines written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub seed: u64,
    pub config_json: String,
    pub config_hash: String,
}

impl Header {
    pub fn lines(&self) -> String {
        format!(
            "# nsk {} seed={} config_hash={}\n# config: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash,
            self.config_json
        )
    }
}

/// Reads observations `(t, v_1..v_d)` from CSV text and normalises them
/// into a path (sorted, times mapped onto `[0, 1]`, first value subtracted).
pub fn parse_path_csv(reader: impl Read, source: &Path) -> Result<PiecewiseLinearPath> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e| Error::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, &str> =
            record.iter().map(|f| f.parse::<f64>().map_err(|_| f)).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first row is a header
            Err(_) if k == 0 => continue,
            Err(field) => {
                return Err(Error::NonNumeric {
                    path: source.to_path_buf(),
                    line,
                    field: field.to_string(),
                })
            }
        };
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected || expected < 2 {
            return Err(Error::Ragged {
                path: source.to_path_buf(),
                line,
                expected: expected.max(2),
                found: values.len(),
            });
        }
        rows.push((values[0], values[1..].to_vec()));
    }
    Ok(PiecewiseLinearPath::from_observations(rows)?)
}

pub fn read_path(path: &Path) -> Result<PiecewiseLinearPath> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_path_csv(file, path)
}

/// Where an output goes: a file, or standard output for `None`.
pub struct Sink {
    target: PathBuf,
    out: Box<dyn Write>,
}

impl Sink {
    pub fn create(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let f = File::create(p).map_err(|e| Error::io(p, e))?;
                Ok(Self {
                    target: p.to_path_buf(),
                    out: Box::new(BufWriter::new(f)),
                })
            }
            None => Ok(Self {
                target: PathBuf::from("<stdout>"),
                out: Box::new(std::io::stdout().lock()),
            }),
        }
    }

    pub fn write_str(&mut self, s: &str) -> Result<()> {
        self.out.write_all(s.as_bytes()).map_err(|e| Error::io(&self.target, e))
    }

    /// Writes the provenance header, a column header and the rows.
    pub fn write_table<R, I>(&mut self, header: &Header, columns: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        self.write_str(&header.lines())?;
        let target = self.target.clone();
        let mut w = csv::Writer::from_writer(&mut self.out);
        let err = |e| Error::Csv {
            path: target.clone(),
            source: e,
        };
        w.write_record(columns).map_err(err)?;
        for row in rows {
            w.write_record(row).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(&target, e))?;
        drop(w);
        self.flush()
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.target, e))
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_path(sink: &mut Sink, header: &Header, path: &PiecewiseLinearPath) -> Result<()> {
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=path.dim()).map(|c| format!("x{c}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = (0..path.len()).map(|k| {
        std::iter::once(fmt(path.times()[k]))
            .chain(path.point(k).iter().map(|&v| fmt(v)))
            .collect::<Vec<_>>()
    });
    sink.write_table(header, &cols, rows)
}

pub fn write_trajectory(sink: &mut Sink, header: &Header, traj: &KernelTrajectory) -> Result<()> {
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, k)| [fmt(*t), fmt(k.xx), fmt(k.xy), fmt(k.yy)]);
    sink.write_table(header, &["t", "k_xx", "k_xy", "k_yy"], rows)
}

pub fn write_surface(sink: &mut Sink, header: &Header, surface: &KernelSurface) -> Result<()> {
    let s = surface.s_grid.points();
    let t = surface.t_grid.points();
    let rows = (0..s.len()).flat_map(|i| (0..t.len()).map(move |j| [fmt(s[i]), fmt(t[j]), fmt(surface.get(i, j))]));
    sink.write_table(header, &["s", "t", "value"], rows)
}
