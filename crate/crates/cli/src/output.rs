//! Versioned CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use forgesim::trainer::{Checkpoint, EpochRecord};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::failure::Failure;

pub const FORMAT_VERSION: u32 = 1;
/// Epochs averaged in the trace's `running_mean` column.
pub const RUNNING_WINDOW: usize = 50;

/// Shortest round-trip text for `x`, scientific for tiny magnitudes.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(&format!("cannot create {}", path.display()), e))
}

fn finish(path: &Path, w: BufWriter<File>) -> Result<(), Failure> {
    w.into_inner()
        .map_err(|e| e.into_error())
        .and_then(|f| f.sync_all())
        .map_err(|e| Failure::io(&format!("cannot write {}", path.display()), e))
}

fn wrap(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::io(&format!("cannot write {}", path.display()), e)
}

/// Energy and gradient norms per epoch. Deterministic for exact runs.
pub fn write_trace(path: &Path, records: &[EpochRecord]) -> Result<(), Failure> {
    let mut w = create(path)?;
    let err = wrap(path);
    writeln!(w, "# format_version={FORMAT_VERSION}").map_err(&err)?;
    writeln!(w, "epoch,energy,running_mean,grad_norm_theta,grad_norm_omega").map_err(&err)?;
    for (k, r) in records.iter().enumerate() {
        let lo = (k + 1).saturating_sub(RUNNING_WINDOW);
        let window = &records[lo..=k];
        let mean = window.iter().map(|x| x.energy).sum::<f64>() / window.len() as f64;
        writeln!(w, "{},{},{},{},{}", r.epoch, num(r.energy), num(mean), num(r.grad_norm_theta), num(r.grad_norm_omega)).map_err(&err)?;
    }
    finish(path, w)
}

/// Wall time per epoch, kept apart so the trace stays reproducible.
pub fn write_timing(path: &Path, records: &[EpochRecord]) -> Result<(), Failure> {
    let mut w = create(path)?;
    let err = wrap(path);
    writeln!(w, "# format_version={FORMAT_VERSION}").map_err(&err)?;
    writeln!(w, "epoch,wall_ms").map_err(&err)?;
    for r in records {
        writeln!(w, "{},{:.3}", r.epoch, r.wall_ms).map_err(&err)?;
    }
    finish(path, w)
}

/// Upper triangle of the `⟨Z_i Z_j⟩` matrices.
pub fn write_correlators(path: &Path, forged: &DMatrix<f64>, exact: &DMatrix<f64>) -> Result<(), Failure> {
    let mut w = create(path)?;
    let err = wrap(path);
    writeln!(w, "# format_version={FORMAT_VERSION}").map_err(&err)?;
    writeln!(w, "i,j,forged,exact,abs_err").map_err(&err)?;
    for i in 0..forged.nrows() {
        for j in i + 1..forged.ncols() {
            let (f, e) = (forged[(i, j)], exact[(i, j)]);
            writeln!(w, "{i},{j},{},{},{}", num(f), num(e), num((f - e).abs())).map_err(&err)?;
        }
    }
    finish(path, w)
}

/// Exact correlators alone, as printed by `ed`.
pub fn correlator_table(exact: &DMatrix<f64>) -> String {
    let mut s = format!("# format_version={FORMAT_VERSION}\ni,j,exact\n");
    for i in 0..exact.nrows() {
        for j in i + 1..exact.ncols() {
            s.push_str(&format!("{i},{j},{}\n", num(exact[(i, j)])));
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(wrap(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), Failure> {
    write_json(path, ckpt)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read checkpoint {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("malformed checkpoint {}: {e}", path.display())))
}
