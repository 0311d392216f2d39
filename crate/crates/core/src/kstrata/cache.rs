//! Binary strata cache, all integers little-endian:
//!
//! ```text
//! b"HCNSTRAT" | version: u16 | n: u64 | k: u16 | offsets: u64[n+1] | indices: u64[offsets[n]]
//! ```

use std::path::Path;

use super::StrataError;
use crate::graph::StrataMatrix;

const MAGIC: &[u8; 8] = b"HCNSTRAT";
const VERSION: u16 = 1;

pub fn strata_to_bytes(m: &StrataMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 2 + 8 + 2 + 8 * (m.n() + 1 + m.nnz()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n() as u64).to_le_bytes());
    out.extend_from_slice(&(m.order() as u16).to_le_bytes());
    for &o in m.offsets() {
        out.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &c in m.indices() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8], StrataError> {
        let end = self.pos.checked_add(len).ok_or(StrataError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(StrataError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, StrataError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StrataError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn strata_from_bytes(buf: &[u8]) -> Result<StrataMatrix, StrataError> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8).map_err(|_| StrataError::BadMagic)? != MAGIC {
        return Err(StrataError::BadMagic);
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(StrataError::Version(version));
    }
    let n = cur.u64()? as usize;
    let k = cur.u16()? as usize;
    if k == 0 {
        return Err(StrataError::Corrupt("order 0"));
    }
    if n.checked_add(1)
        .and_then(|m| m.checked_mul(8))
        .is_none_or(|b| b > buf.len())
    {
        return Err(StrataError::Truncated);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(cur.u64()? as usize);
    }
    if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(StrataError::Corrupt("row offsets not monotone"));
    }
    let nnz = offsets[n];
    if nnz.checked_mul(8).is_none_or(|b| b > buf.len() - cur.pos) {
        return Err(StrataError::Truncated);
    }
    let mut indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let c = cur.u64()? as usize;
        if c >= n {
            return Err(StrataError::Corrupt("column index out of range"));
        }
        indices.push(c);
    }
    if cur.pos != buf.len() {
        return Err(StrataError::Corrupt("trailing bytes"));
    }
    for r in 0..n {
        if indices[offsets[r]..offsets[r + 1]]
            .windows(2)
            .any(|w| w[0] >= w[1])
        {
            return Err(StrataError::Corrupt("row not strictly increasing"));
        }
    }
    Ok(StrataMatrix::from_csr(k, n, offsets, indices))
}

pub fn write_strata_cache(path: impl AsRef<Path>, m: &StrataMatrix) -> Result<(), StrataError> {
    let path = path.as_ref();
    std::fs::write(path, strata_to_bytes(m)).map_err(|source| StrataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_strata_cache(path: impl AsRef<Path>) -> Result<StrataMatrix, StrataError> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|source| StrataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    strata_from_bytes(&buf)
}
