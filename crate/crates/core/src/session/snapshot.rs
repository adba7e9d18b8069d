//! Binary session snapshots.
//!
//! ```text
//! magic    8 bytes  "SRXSNAP1"
//! version  u32 LE
//! crc32    u32 LE   over everything after this field
//! sections 3 x (u64 LE length, bincode payload): graph, catalog, meta
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::egraph::EGraph;

pub const MAGIC: &[u8; 8] = b"SRXSNAP1";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot file")]
    BadMagic,
    #[error("snapshot format version {found} is not supported (expected {VERSION})")]
    Version { found: u32 },
    #[error("snapshot is corrupt or truncated (checksum mismatch)")]
    Checksum,
    #[error("snapshot section is malformed: {0}")]
    Decode(#[from] bincode::Error),
    #[error("snapshot section is truncated")]
    Truncated,
}

/// Session state that is not part of the graph or catalog.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub seed: u64,
    pub fits: u64,
}

pub fn encode(g: &EGraph, c: &Catalog, meta: &Meta) -> Result<Vec<u8>, SnapshotError> {
    let mut body = Vec::new();
    for section in [bincode::serialize(g)?, bincode::serialize(c)?, bincode::serialize(meta)?] {
        body.extend_from_slice(&(section.len() as u64).to_le_bytes());
        body.extend_from_slice(&section);
    }
    let mut out = Vec::with_capacity(body.len() + 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(EGraph, Catalog, Meta), SnapshotError> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < 16 {
        return Err(SnapshotError::Checksum);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(SnapshotError::Version { found: version });
    }
    let crc = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    let body = &bytes[16..];
    if crc32fast::hash(body) != crc {
        return Err(SnapshotError::Checksum);
    }
    let mut rest = body;
    let mut section = || -> Result<&[u8], SnapshotError> {
        if rest.len() < 8 {
            return Err(SnapshotError::Truncated);
        }
        let n = u64::from_le_bytes(rest[..8].try_into().expect("8 bytes")) as usize;
        if rest.len() - 8 < n {
            return Err(SnapshotError::Truncated);
        }
        let s = &rest[8..8 + n];
        rest = &rest[8 + n..];
        Ok(s)
    };
    let mut g: EGraph = bincode::deserialize(section()?)?;
    let c: Catalog = bincode::deserialize(section()?)?;
    let meta: Meta = bincode::deserialize(section()?)?;
    g.restore();
    Ok((g, c, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Dialect};
    use crate::fitdata::{FitRecord, LossKind};

    fn sample() -> Vec<u8> {
        let mut g = EGraph::new();
        let mut c = Catalog::new();
        let e = parse_expression("t0 * x0 + sin(x1)", &Dialect::GENERIC, false).unwrap().expr;
        let id = g.add_expr(&e);
        g.rebuild();
        c.register(id, e.clone(), FitRecord::new(&e, vec![1.5], -0.25, LossKind::Mse)).unwrap();
        encode(&g, &c, &Meta { seed: 7, fits: 3 }).unwrap()
    }

    #[test]
    fn round_trip() {
        let bytes = sample();
        let (g, c, meta) = decode(&bytes).unwrap();
        assert_eq!(meta, Meta { seed: 7, fits: 3 });
        assert_eq!(c.len(), 1);
        assert_eq!(encode(&g, &c, &meta).unwrap(), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = sample();
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(SnapshotError::Checksum)));
        assert!(matches!(decode(b"hello world, not a snapshot"), Err(SnapshotError::BadMagic)));
        let mut v = bytes.clone();
        v[8] = 9;
        assert!(matches!(decode(&v), Err(SnapshotError::Version { found: 9 })));
        let mut v = bytes;
        let last = v.len() - 1;
        v[last] ^= 0xff;
        assert!(matches!(decode(&v), Err(SnapshotError::Checksum)));
    }
}
