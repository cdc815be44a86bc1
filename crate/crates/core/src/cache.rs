//! Binary persistence of sieve tables.
//!
//! Layout (all integers little endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `ETLB` |
//! | 4 | format version (u32) |
//! | 1 | function tag |
//! | 8 | theta (f64, 0.0 when absent) |
//! | 8 | n_max (u64) |
//! | 1 | payload kind: 0 = u64 values, 1 = f64 values |
//! | 8·n_max | a(1), …, a(n_max) |
//!
//! Prefix sums are rebuilt on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::arith::{ArithFnId, SieveTable};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ETLB";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 4 + 4 + 1 + 8 + 8 + 1;

const PAYLOAD_U64: u8 = 0;
const PAYLOAD_F64: u8 = 1;

/// Decoded header of a cache file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheHeader {
    pub version: u32,
    pub fn_id: ArithFnId,
    pub n_max: u64,
    pub payload_kind: u8,
}

pub fn write_table(table: &SieveTable, path: &Path) -> Result<()> {
    write_table_versioned(table, path, FORMAT_VERSION)
}

/// Same as [`write_table`] but stamps an arbitrary version; used to
/// exercise version checks.
pub fn write_table_versioned(table: &SieveTable, path: &Path, version: u32) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let fn_id = table.fn_id();
    let kind = if table.is_exact_integer() { PAYLOAD_U64 } else { PAYLOAD_F64 };
    w.write_all(MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&[fn_id.tag_byte()])?;
    w.write_all(&fn_id.theta().unwrap_or(0.0).to_le_bytes())?;
    w.write_all(&table.n_max().to_le_bytes())?;
    w.write_all(&[kind])?;
    for &v in &table.values()[1..] {
        if kind == PAYLOAD_U64 {
            w.write_all(&(v as u64).to_le_bytes())?;
        } else {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_header_from<R: Read>(r: &mut R) -> Result<CacheHeader> {
    let mut buf = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut buf).map_err(|_| Error::CorruptCache("file shorter than header".into()))?;
    if &buf[0..4] != MAGIC {
        return Err(Error::CorruptCache("bad magic".into()));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let tag = buf[8];
    let theta = f64::from_le_bytes(buf[9..17].try_into().unwrap());
    let n_max = u64::from_le_bytes(buf[17..25].try_into().unwrap());
    let payload_kind = buf[25];
    if payload_kind > PAYLOAD_F64 {
        return Err(Error::CorruptCache(format!("unknown payload kind {payload_kind}")));
    }
    let fn_id =
        ArithFnId::from_tag_byte(tag, theta).map_err(|e| Error::CorruptCache(format!("bad function tag: {e}")))?;
    if fn_id.theta().is_none() && theta != 0.0 {
        return Err(Error::CorruptCache("theta set for untwisted function".into()));
    }
    if n_max == 0 {
        return Err(Error::CorruptCache("n_max is zero".into()));
    }
    Ok(CacheHeader { version, fn_id, n_max, payload_kind })
}

pub fn read_header(path: &Path) -> Result<CacheHeader> {
    let mut r = BufReader::new(File::open(path)?);
    read_header_from(&mut r)
}

/// Reads a table, failing closed on any inconsistency.
pub fn read_table(path: &Path) -> Result<SieveTable> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let header = read_header_from(&mut r)?;
    let expected = header
        .n_max
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::CorruptCache("n_max overflows".into()))?;
    if len != expected {
        return Err(Error::CorruptCache(format!("length {len} does not match header (expected {expected})")));
    }
    let mut values = Vec::with_capacity(header.n_max as usize);
    let mut word = [0u8; 8];
    for _ in 0..header.n_max {
        r.read_exact(&mut word).map_err(|_| Error::CorruptCache("payload truncated".into()))?;
        values.push(if header.payload_kind == PAYLOAD_U64 {
            u64::from_le_bytes(word) as f64
        } else {
            f64::from_le_bytes(word)
        });
    }
    SieveTable::from_values(header.fn_id, &values)
}

/// Writes `table` to `path` and reads it back.
pub fn cache_roundtrip(table: &SieveTable, path: &Path) -> Result<SieveTable> {
    write_table(table, path)?;
    read_table(path)
}
