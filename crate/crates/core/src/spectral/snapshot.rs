//! Field snapshots: a flat little-endian `.bin` of coefficients plus a `.json` sidecar.
//!
//! Binary layout: component-major; within a component, modes in lexicographic order
//! of the integer wavevector `(n1, n2, n3)` with each `n_i` running from `-N/2 + 1` to
//! `N/2` (`n3` fastest); each coefficient is two `f64` values, real then imaginary.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::field::{FieldKind, SpectralField};
use crate::spectral::grid::make_grid;

pub const SNAPSHOT_FORMAT: &str = "critles-spectral-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFlags {
    pub real: bool,
    pub zero_mean: bool,
    pub divergence_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub format: String,
    pub resolution: usize,
    pub period: f64,
    pub dealias_fraction: f64,
    pub kind: FieldKind,
    pub components: usize,
    pub flags: SnapshotFlags,
    pub time: f64,
    /// Name of the coefficient file, relative to the sidecar.
    pub data_file: String,
}

fn lexicographic_indices(n: usize) -> impl Iterator<Item = usize> {
    let half = n as i64 / 2;
    let wrap = move |m: i64| {
        if m < 0 {
            (m + n as i64) as usize
        } else {
            m as usize
        }
    };
    (-half + 1..=half).flat_map(move |a| {
        (-half + 1..=half).flat_map(move |b| {
            (-half + 1..=half).map(move |c| (wrap(a) * n + wrap(b)) * n + wrap(c))
        })
    })
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the sidecar path.
pub fn write_snapshot(field: &SpectralField, time: f64, stem: &Path) -> Result<PathBuf> {
    let grid = field.grid();
    let n = grid.resolution();
    let bin_path = stem.with_extension("bin");
    let json_path = stem.with_extension("json");

    let mut bytes = Vec::with_capacity(field.components().len() * grid.len() * 16);
    for comp in field.components() {
        for idx in lexicographic_indices(n) {
            bytes.extend_from_slice(&comp[idx].re.to_le_bytes());
            bytes.extend_from_slice(&comp[idx].im.to_le_bytes());
        }
    }
    fs::write(&bin_path, bytes)?;

    let scale = field.max_amplitude();
    let meta = SnapshotMeta {
        format: SNAPSHOT_FORMAT.to_string(),
        resolution: n,
        period: grid.period(),
        dealias_fraction: grid.dealias_fraction(),
        kind: field.kind(),
        components: field.kind().components(),
        flags: SnapshotFlags {
            real: field.conjugate_asymmetry() <= 1e-13 * scale,
            zero_mean: field.is_zero_mean(),
            divergence_free: field.kind() == FieldKind::Vector
                && field.max_divergence() <= 1e-12 * scale,
        },
        time,
        data_file: bin_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(json_path)
}

/// Reads a snapshot given its sidecar (`.json`) or data (`.bin`) path.
pub fn read_snapshot(path: &Path) -> Result<(SpectralField, SnapshotMeta)> {
    let json_path = path.with_extension("json");
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
    if meta.format != SNAPSHOT_FORMAT {
        return Err(Error::Snapshot(format!(
            "unknown format tag {:?}",
            meta.format
        )));
    }
    if meta.components != meta.kind.components() {
        return Err(Error::Snapshot(
            "component count disagrees with kind".into(),
        ));
    }
    let grid = make_grid(meta.resolution, meta.period, meta.dealias_fraction)?;
    let bin_path = json_path.with_file_name(&meta.data_file);
    let bytes = fs::read(&bin_path)?;
    let expected = meta.components * grid.len() * 16;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "{} holds {} bytes, expected {expected}",
            bin_path.display(),
            bytes.len()
        )));
    }
    let mut comps = vec![vec![Complex64::default(); grid.len()]; meta.components];
    let mut words = bytes
        .chunks_exact(8)
        .map(|w| f64::from_le_bytes(w.try_into().expect("8-byte chunk")));
    for comp in comps.iter_mut() {
        for idx in lexicographic_indices(meta.resolution) {
            let re = words.next().expect("length checked");
            let im = words.next().expect("length checked");
            comp[idx] = Complex64::new(re, im);
        }
    }
    let field = SpectralField::from_components(&grid, meta.kind, comps)?;
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_solenoidal;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = random_solenoidal(&g, 5, -2.0);
        let sidecar = write_snapshot(&f, 0.25, &dir.path().join("w")).unwrap();
        let (back, meta) = read_snapshot(&sidecar).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta.time, 0.25);
        assert!(meta.flags.real && meta.flags.zero_mean && meta.flags.divergence_free);
        let len = fs::metadata(dir.path().join("w.bin")).unwrap().len();
        assert_eq!(len as usize, 3 * 512 * 16);
    }

    #[test]
    fn first_record_is_most_negative_mode() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(4, 2.0 * PI, 1.0).unwrap();
        let mut f = SpectralField::zeros(&g, FieldKind::Scalar);
        f.set_mode([-1, -1, -1], 0, Complex64::new(0.5, -0.25))
            .unwrap();
        write_snapshot(&f, 0.0, &dir.path().join("s")).unwrap();
        let bytes = fs::read(dir.path().join("s.bin")).unwrap();
        assert_eq!(f64::from_le_bytes(bytes[0..8].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), -0.25);
        // (1, 1, 1) is the partner, at lexicographic position (2*4 + 2)*4 + 2
        let off = ((2 * 4 + 2) * 4 + 2) * 16;
        assert_eq!(
            f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap()),
            0.25
        );
    }

    #[test]
    fn rejects_truncated_data() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(4, 2.0 * PI, 1.0).unwrap();
        let f = SpectralField::zeros(&g, FieldKind::Scalar);
        let sidecar = write_snapshot(&f, 0.0, &dir.path().join("s")).unwrap();
        fs::write(dir.path().join("s.bin"), [0u8; 10]).unwrap();
        assert!(matches!(read_snapshot(&sidecar), Err(Error::Snapshot(_))));
    }
}
