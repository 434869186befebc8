//! Binary field snapshots.
//!
//! Byte layout, all integers and floats little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 4 | `u32` length `L` of the JSON header |
//! | 4 | `L` | UTF-8 JSON [`SnapshotHeader`] |
//! | 4 + L | `8·c·nᵈ` | `f64` samples, component-major, each component in grid order |
//!
//! Grid order is the flat node index `i0 + n·i1 (+ n²·i2)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    pub d: usize,
    pub name: String,
    pub time: f64,
    pub components: usize,
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub components: Vec<ScalarField<f64>>,
}

pub fn write_snapshot<T: Real, W: Write>(
    mut out: W,
    name: &str,
    time: f64,
    components: &[ScalarField<T>],
) -> Result<()> {
    let grid =
        components.first().map(ScalarField::grid).ok_or_else(|| Error::Format("snapshot without components".into()))?;
    let header = SnapshotHeader {
        n: grid.n(),
        d: grid.d(),
        name: name.to_owned(),
        time,
        components: components.len(),
        dtype: "f64".into(),
    };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Format("header too long".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(8 * grid.len());
    for c in components {
        buf.clear();
        c.values().iter().for_each(|v| buf.extend_from_slice(&v.as_f64().to_le_bytes()));
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    if header.dtype != "f64" {
        return Err(Error::Format(format!("unsupported dtype {}", header.dtype)));
    }
    let grid = Grid::new(header.n, header.d)?;
    let mut bytes = vec![0u8; 8 * grid.len()];
    let components = (0..header.components)
        .map(|_| {
            input.read_exact(&mut bytes)?;
            let values =
                bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
            ScalarField::new(grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot { header, components })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let grid = Grid::square(8);
        let a = ScalarField::from_fn(grid, |x: [f64; 3]| x[0].exp() - x[1]);
        let b = ScalarField::from_fn(grid, |x: [f64; 3]| 1.0 / (1.0 + x[1]));
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, "v", 0.25, &[a.clone(), b.clone()]).unwrap();
        let header_len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 4 + header_len + 2 * 8 * 64);
        let snap = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(snap.header.name, "v");
        assert_eq!(snap.header.time, 0.25);
        assert_eq!(snap.components, vec![a, b]);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let grid = Grid::square(8);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, "rho", 0.0, &[ScalarField::<f64>::zeros(grid)]).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }
}
