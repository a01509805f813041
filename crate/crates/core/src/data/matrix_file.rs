//! `FSMX` binary matrix files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "FSMX" | version u16 | n u64 | m u64 | nnz u64
//! row_ptr (n + 1) × u64 | col_idx nnz × u32
//! m vocabulary strings, then n sample-id strings,
//! each as byte length u32 followed by UTF-8 bytes
//! ```

use std::io::{Read, Write};

use super::matrix::OccurrenceMatrix;
use super::record::MutationKey;
use crate::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"FSMX";
pub const MATRIX_FORMAT_VERSION: u16 = 1;

pub fn write_matrix<W: Write>(matrix: &OccurrenceMatrix, mut out: W) -> std::io::Result<()> {
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&MATRIX_FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(matrix.n_samples() as u64).to_le_bytes())?;
    out.write_all(&(matrix.n_features() as u64).to_le_bytes())?;
    out.write_all(&(matrix.nnz() as u64).to_le_bytes())?;
    for &p in matrix.row_ptr() {
        out.write_all(&(p as u64).to_le_bytes())?;
    }
    for &c in matrix.col_idx() {
        out.write_all(&c.to_le_bytes())?;
    }
    for key in matrix.vocabulary() {
        write_str(&mut out, key.as_str())?;
    }
    for id in matrix.sample_ids() {
        write_str(&mut out, id)?;
    }
    out.flush()
}

fn write_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated matrix file: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn count(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count overflows usize".into()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = Vec::new();
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut buf)
            .map_err(|e| Error::Format(e.to_string()))?;
        if buf.len() != len {
            return Err(Error::Format("truncated string in matrix file".into()));
        }
        String::from_utf8(buf).map_err(|_| Error::Format("string is not UTF-8".into()))
    }
}

pub fn read_matrix<R: Read>(input: R) -> Result<OccurrenceMatrix> {
    let mut r = Reader { inner: input };
    if &r.bytes::<4>()? != MATRIX_MAGIC {
        return Err(Error::Format("not an FSMX matrix file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(r.bytes()?);
    if version != MATRIX_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported FSMX version {version}")));
    }
    let n = r.count()?;
    let m = r.count()?;
    let nnz = r.count()?;
    // Grow incrementally so a corrupt header cannot force a huge allocation.
    let mut row_ptr = Vec::new();
    for _ in 0..=n {
        row_ptr.push(r.count()?);
    }
    let mut col_idx = Vec::new();
    for _ in 0..nnz {
        col_idx.push(r.u32()?);
    }
    let mut vocabulary = Vec::new();
    for _ in 0..m {
        vocabulary.push(r.string()?.parse::<MutationKey>()?);
    }
    let mut sample_ids = Vec::new();
    for _ in 0..n {
        sample_ids.push(r.string()?);
    }
    OccurrenceMatrix::from_csr(vocabulary, sample_ids, row_ptr, col_idx)
}
