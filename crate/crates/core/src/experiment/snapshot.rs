//! `SBF1` snapshot files: a 32-byte little-endian header followed by the
//! physical values of every component in row-major order.
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 4    | magic `SBF1`           |
//! | 4      | 1    | version (1)            |
//! | 5      | 1    | dimension              |
//! | 6      | 1    | components             |
//! | 7      | 1    | reserved (0)           |
//! | 8      | 8    | `n` (u64)              |
//! | 16     | 8    | period (f64)           |
//! | 24     | 8    | time (f64)             |
//! | 32     | …    | `components · n^d` f64 |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::spectral::{Field, TorusGrid};

pub const MAGIC: &[u8; 4] = b"SBF1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(offset: usize, message: impl Into<String>) -> SnapshotError {
    SnapshotError::Format {
        offset,
        message: message.into(),
    }
}

pub fn encode_snapshot(field: &Field, time: f64) -> Vec<u8> {
    let grid = field.grid();
    let values = field.physical();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, grid.dim() as u8, field.components() as u8, 0]);
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&grid.period().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Returns the field and its time stamp.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(Field, f64), SnapshotError> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), format!("header truncated ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected SBF1"));
    }
    if bytes[4] != VERSION {
        return Err(format_err(4, format!("unsupported version {}", bytes[4])));
    }
    let dim = bytes[5] as usize;
    let components = bytes[6] as usize;
    if bytes[7] != 0 {
        return Err(format_err(7, "reserved byte is not zero"));
    }
    let word = |at: usize| <[u8; 8]>::try_from(&bytes[at..at + 8]).expect("header length checked");
    let n = u64::from_le_bytes(word(8));
    let period = f64::from_le_bytes(word(16));
    let time = f64::from_le_bytes(word(24));
    let grid = TorusGrid::new(dim, n as usize, period).map_err(|e| format_err(5, e.to_string()))?;
    if components == 0 {
        return Err(format_err(6, "zero components"));
    }
    let count = components * grid.len();
    let expected = HEADER_LEN + 8 * count;
    if bytes.len() < expected {
        let whole = (bytes.len() - HEADER_LEN) / 8;
        return Err(format_err(
            HEADER_LEN + 8 * whole,
            format!("payload truncated: {whole} of {count} values"),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, "trailing bytes after payload"));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = Field::from_physical(grid, components, values).map_err(|e| format_err(HEADER_LEN, e.to_string()))?;
    Ok((field, time))
}

pub fn write_snapshot(field: &Field, time: f64, path: &Path) -> Result<(), SnapshotError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_snapshot(field, time))?;
    f.sync_all()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64), SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_at_eight_points_is_96_bytes() {
        let g = TorusGrid::standard(1, 8).unwrap();
        let f = Field::scalar_fn(g, |x| x[0].sin());
        let bytes = encode_snapshot(&f, 0.25);
        assert_eq!(bytes.len(), 96);
        let (back, t) = decode_snapshot(&bytes).unwrap();
        assert_eq!(t, 0.25);
        let same = back.physical().iter().zip(f.physical()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn damaged_files_report_offsets() {
        let g = TorusGrid::standard(2, 4).unwrap();
        let f = Field::from_fn(g, 2, |x, j| x[j].cos());
        let bytes = encode_snapshot(&f, 1.0);
        let err = |b: &[u8]| match decode_snapshot(b) {
            Err(SnapshotError::Format { offset, .. }) => offset,
            other => panic!("{other:?}"),
        };
        assert_eq!(err(&bytes[..HEADER_LEN + 8 * 5 + 3]), HEADER_LEN + 40);
        assert_eq!(err(&bytes[..10]), 10);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(err(&bad), 0);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(err(&bad), 4);
        let mut long = bytes;
        long.push(0);
        assert_eq!(err(&long), HEADER_LEN + 8 * 32);
    }
}
