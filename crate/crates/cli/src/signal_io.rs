//! Binary signal files: one JSON header line `{"d", "N", "L"}` followed by
//! `N^d` little-endian `f64` pairs `(re, im)` in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use warpco::fftnd::Complex64;
use warpco::transform::{FrequencyGrid, SampledSignal};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Header {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

pub fn write_signal(path: &Path, signal: &SampledSignal) -> std::io::Result<()> {
    let g = signal.grid;
    let header = Header {
        d: g.dim,
        n: g.n,
        l: g.extent,
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(16 * signal.values.len());
    for v in &signal.values {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    fs::write(path, out)
}

pub fn read_signal(path: &Path) -> Result<SampledSignal, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format!("{}: missing header line", path.display()))?;
    let header: Header =
        serde_json::from_slice(&bytes[..split]).map_err(|e| format!("{}: bad header: {e}", path.display()))?;
    let grid = FrequencyGrid::new(header.d, header.n, header.l).map_err(|e| e.to_string())?;
    let body = &bytes[split + 1..];
    if body.len() != 16 * grid.len() {
        return Err(format!(
            "{}: expected {} bytes of samples, found {}",
            path.display(),
            16 * grid.len(),
            body.len()
        ));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8-byte chunk"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8-byte chunk"));
            Complex64::new(re, im)
        })
        .collect();
    SampledSignal::new(grid, values).map_err(|e| e.to_string())
}
