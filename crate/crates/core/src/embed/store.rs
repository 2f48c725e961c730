//! Single-file vector store.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "IGVSTORE"
//! version    u32
//! dim        u32
//! n_rows     u64
//! tag_len    u32, followed by tag_len bytes of UTF-8 space tag
//! row_ids    n_rows x u64
//! values     n_rows x dim x f32 (row-major)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const STORE_MAGIC: &[u8; 8] = b"IGVSTORE";
pub const STORE_VERSION: u32 = 1;

pub fn write_store<W: Write>(m: &EmbeddingMatrix, mut w: W) -> std::io::Result<()> {
    w.write_all(STORE_MAGIC)?;
    w.write_u32::<LittleEndian>(STORE_VERSION)?;
    w.write_u32::<LittleEndian>(m.dim() as u32)?;
    w.write_u64::<LittleEndian>(m.n_rows() as u64)?;
    let tag = m.space_tag().as_bytes();
    w.write_u32::<LittleEndian>(tag.len() as u32)?;
    w.write_all(tag)?;
    for &id in m.row_ids() {
        w.write_u64::<LittleEndian>(id)?;
    }
    for &v in m.values() {
        w.write_f32::<LittleEndian>(v)?;
    }
    w.flush()
}

fn corrupt(e: std::io::Error) -> Error {
    Error::Corrupt(format!("truncated or unreadable store: {e}"))
}

pub fn read_store<R: Read>(mut r: R) -> Result<EmbeddingMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(corrupt)?;
    if &magic != STORE_MAGIC {
        return Err(Error::Corrupt("bad magic bytes".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(corrupt)?;
    if version != STORE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: STORE_VERSION,
        });
    }
    let dim = r.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
    let n = r.read_u64::<LittleEndian>().map_err(corrupt)? as usize;
    let tag_len = r.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag).map_err(corrupt)?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Corrupt("space tag is not UTF-8".into()))?;
    let mut row_ids = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        row_ids.push(r.read_u64::<LittleEndian>().map_err(corrupt)?);
    }
    let total = n
        .checked_mul(dim)
        .ok_or_else(|| Error::Corrupt("row count overflow".into()))?;
    let mut values = vec![0f32; total];
    r.read_f32_into::<LittleEndian>(&mut values).map_err(corrupt)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(corrupt)? != 0 {
        return Err(Error::Corrupt("trailing bytes after matrix".into()));
    }
    EmbeddingMatrix::new(row_ids, dim, values, tag).map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn save_store(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_store(m, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_store(path: &Path) -> Result<EmbeddingMatrix> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_store(BufReader::new(f))
}
