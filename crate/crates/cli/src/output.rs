//! On-disk writers: the diagnostics CSV, the closest-return CSV, JSON
//! documents and per-sample snapshot files.
//!
//! Floats are written in shortest round-trip form, so identical runs produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chflow::diagnostics::DiagnosticsRecord;
use chflow::dynamics::{RunObserver, State};
use chflow::recurrence::ReturnPoint;
use chflow::VectorField;
use serde::Serialize;

use crate::error::CliError;
use crate::snapshot;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const COVER_FILE: &str = "cover.json";
pub const CLOSEST_RETURN_FILE: &str = "closest_return.csv";
pub const VERIFY_FILE: &str = "verify.json";
pub const DIAGNOSTICS_HEADER: &str = "t,E,G,mean_u,mean_v,lemma1_residual,h1_seminorm_sq";
pub const CLOSEST_RETURN_HEADER: &str = "m,t,distance,running_min";

#[derive(Serialize)]
struct DiagnosticsRow {
    t: f64,
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "G")]
    enstrophy: f64,
    mean_u: f64,
    mean_v: f64,
    lemma1_residual: f64,
    h1_seminorm_sq: f64,
}

impl From<&DiagnosticsRecord> for DiagnosticsRow {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            t: r.t,
            energy: r.energy,
            enstrophy: r.enstrophy,
            mean_u: r.mean_u,
            mean_v: r.mean_v,
            lemma1_residual: r.lemma1_residual,
            h1_seminorm_sq: r.h1_seminorm_sq,
        }
    }
}

#[derive(Serialize)]
struct ReturnRow {
    m: usize,
    t: f64,
    distance: f64,
    running_min: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

/// Run observer that appends every diagnostics row to a CSV file and,
/// optionally, writes each sampled state as a snapshot file.
///
/// Rows are flushed as they arrive so an aborted run leaves a readable file.
/// The first I/O failure is kept and reported by [`DiagnosticsSink::finish`].
pub struct DiagnosticsSink {
    writer: csv::Writer<BufWriter<File>>,
    snapshot_dir: Option<PathBuf>,
    snapshots_written: usize,
    error: Option<CliError>,
}

impl DiagnosticsSink {
    pub fn create(path: &Path, snapshot_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
        writer.write_record(DIAGNOSTICS_HEADER.split(','))?;
        writer.flush()?;
        Ok(Self { writer, snapshot_dir, snapshots_written: 0, error: None })
    }

    pub fn snapshots_written(&self) -> usize {
        self.snapshots_written
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush()?;
        Ok(())
    }

    fn keep(&mut self, r: Result<(), CliError>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }
}

pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:05}.chrc")
}

/// The reduced velocity with the mean flow added back.
pub fn full_velocity(velocity: &VectorField, mean_u: f64) -> VectorField {
    VectorField::new(velocity.u.map(|x| x + mean_u), velocity.v.clone()).expect("components share a grid")
}

impl RunObserver for DiagnosticsSink {
    fn record(&mut self, record: &DiagnosticsRecord) {
        if self.error.is_some() {
            return;
        }
        let r = self
            .writer
            .serialize(DiagnosticsRow::from(record))
            .map_err(CliError::from)
            .and_then(|_| self.writer.flush().map_err(CliError::from));
        self.keep(r);
    }

    fn sample(&mut self, index: usize, state: &State, velocity: &VectorField) {
        let Some(dir) = &self.snapshot_dir else { return };
        if self.error.is_some() {
            return;
        }
        let path = dir.join(snapshot_name(index));
        let r = snapshot::write_file(&path, state.t, &full_velocity(velocity, state.mean_u))
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())));
        if r.is_ok() {
            self.snapshots_written += 1;
        }
        self.keep(r);
    }
}

pub fn write_closest_return(path: &Path, curve: &[ReturnPoint]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(CLOSEST_RETURN_HEADER.split(','))?;
    for p in curve {
        w.serialize(ReturnRow { m: p.m, t: p.t, distance: p.distance, running_min: p.running_min })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
