//! Artifact serialisation: atomic text writes, density JSON dumps and the
//! framed binary trajectory layout (little-endian f64 records with a JSON
//! sidecar carrying shape and seed).

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::pde::field::DensityField;

/// Write a file atomically (temp file in the same directory + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// JSON dump of a density: grid size, grid values and the nonnegative-k
/// Fourier modes as (re, im) pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct DensityDump {
    pub grid: usize,
    pub values: Vec<f64>,
    pub modes: Vec<(f64, f64)>,
}

impl DensityDump {
    pub fn from_field(f: &DensityField) -> Self {
        let n = f.grid_size();
        let modes = (0..=n / 2).map(|k| {
            let c = f.mode(k as i64);
            (c.re, c.im)
        });
        Self {
            grid: n,
            values: f.grid_values(),
            modes: modes.collect(),
        }
    }
}

/// Sidecar metadata of a framed binary dump.
#[derive(Debug, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

/// Write `rows x cols` f64 records (row-major, little-endian) to `path` and
/// a JSON sidecar to `path` + ".json".
pub fn write_frames(path: &Path, data: &[f64], rows: usize, cols: usize, seed: u64) -> Result<()> {
    assert_eq!(data.len(), rows * cols, "shape mismatch");
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for &x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    write_atomic(path, &bytes)?;
    let sidecar = FrameSidecar { rows, cols, seed };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    let side_path = path.with_extension(format!(
        "{}.json",
        path.extension().map(|e| e.to_string_lossy()).unwrap_or_default()
    ));
    write_atomic(&side_path, json.as_bytes())
}

/// Read back a framed dump (used by tests and downstream tooling).
pub fn read_frames(path: &Path) -> Result<(Vec<f64>, FrameSidecar)> {
    let bytes = fs::read(path)?;
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let side_path = path.with_extension(format!(
        "{}.json",
        path.extension().map(|e| e.to_string_lossy()).unwrap_or_default()
    ));
    let sidecar: FrameSidecar = serde_json::from_slice(&fs::read(side_path)?)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    Ok((data, sidecar))
}
