//! Binary field dumps: one JSON header line, then row-major little-endian `f64` values.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DgffError, Domain, FieldSample, SamplerKind};
use crate::geometry::{LatticeBox, Vertex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub corner: [i64; 2],
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
}

pub fn write_field<W: Write>(out: &mut W, s: &FieldSample) -> Result<(), DgffError> {
    let b = s.bbox();
    let header = DumpHeader { corner: [b.corner.x, b.corner.y], width: b.width, height: b.height, seed: s.seed, sampler: s.sampler };
    let io = |e: std::io::Error| DgffError::Dump(e.to_string());
    let line = serde_json::to_string(&header).map_err(|e| DgffError::Dump(e.to_string()))?;
    writeln!(out, "{line}").map_err(io)?;
    for x in &s.values {
        out.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Reads a dump back as a sample on its full box.
pub fn read_field<R: BufRead>(input: &mut R) -> Result<FieldSample, DgffError> {
    let io = |e: std::io::Error| DgffError::Dump(e.to_string());
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    let h: DumpHeader = serde_json::from_str(line.trim_end()).map_err(|e| DgffError::Dump(e.to_string()))?;
    let bbox = LatticeBox::new(Vertex::new(h.corner[0], h.corner[1]), h.width, h.height)?;
    let mut bytes = vec![0u8; 8 * bbox.len()];
    input.read_exact(&mut bytes).map_err(io)?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(FieldSample { domain: Domain::from_box(bbox), values, seed: h.seed, sampler: h.sampler })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgff::sample_spectral;

    #[test]
    fn round_trip() {
        let s = sample_spectral(LatticeBox::new(Vertex::new(-3, 2), 7, 5).unwrap(), 11);
        let mut buf = Vec::new();
        write_field(&mut buf, &s).unwrap();
        let first = buf.iter().position(|&c| c == b'\n').unwrap();
        assert!(std::str::from_utf8(&buf[..first]).unwrap().contains("\"sampler\":\"spectral\""));
        assert_eq!(buf.len(), first + 1 + 8 * 35);
        let back = read_field(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.seed, 11);
        assert_eq!(back.bbox(), s.bbox());
    }
}
