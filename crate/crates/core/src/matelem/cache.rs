use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::RwLock;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"QCQMCMEC";
const VERSION: u32 = 1;
const RECORD: usize = 24;

/// Signed real matrix elements keyed by unordered index pair, so `(i, j)` and
/// `(j, i)` share one entry.
#[derive(Debug, Default)]
pub struct MatrixElementCache {
    entries: RwLock<HashMap<(u64, u64), f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[inline]
pub(crate) fn pair(i: u64, j: u64) -> (u64, u64) {
    if i <= j { (i, j) } else { (j, i) }
}

impl MatrixElementCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Looks up `(i, j)`, counting a hit or a miss.
    pub fn lookup(&self, i: u64, j: u64) -> Option<f64> {
        let v = self.entries.read().get(&pair(i, j)).copied();
        match v {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        v
    }

    /// Stores `value` unless an entry exists; returns the stored value.
    pub fn insert_if_absent(&self, i: u64, j: u64, value: f64) -> f64 {
        *self.entries.write().entry(pair(i, j)).or_insert(value)
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// All entries as `(i, j, value)` with `i <= j`, sorted.
    pub fn sorted_entries(&self) -> Vec<(u64, u64, f64)> {
        let mut v: Vec<(u64, u64, f64)> = self.entries.read().iter().map(|(&(i, j), &x)| (i, j, x)).collect();
        v.sort_by_key(|&(i, j, _)| (i, j));
        v
    }

    /// Binary image: magic, version, 32-byte key, entry count, then sorted
    /// `(i, j, value)` records, all little-endian.
    pub fn write_to(&self, key: &[u8; 32], mut w: impl Write) -> Result<()> {
        let entries = self.sorted_entries();
        let mut buf = Vec::with_capacity(52 + RECORD * entries.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(key);
        buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for (i, j, v) in entries {
            buf.extend_from_slice(&i.to_le_bytes());
            buf.extend_from_slice(&j.to_le_bytes());
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Merge a binary image written by [`write_to`](Self::write_to); existing
    /// entries win. Returns the number of records read.
    pub fn read_from(&self, key: &[u8; 32], mut r: impl Read) -> Result<usize> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let bad = |m: &str| Error::CacheFormat(m.to_string());
        if buf.len() < 52 || &buf[..8] != MAGIC {
            return Err(bad("not a matrix element cache"));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::CacheFormat(format!("unsupported version {version}")));
        }
        if &buf[12..44] != key {
            return Err(bad("key does not match this Hamiltonian, circuit and backend"));
        }
        let count = u64::from_le_bytes(buf[44..52].try_into().unwrap()) as usize;
        let body = &buf[52..];
        if body.len() != count.checked_mul(RECORD).ok_or_else(|| bad("entry count overflow"))? {
            return Err(Error::CacheFormat(format!("expected {count} records, found {} bytes", body.len())));
        }
        let mut prev: Option<(u64, u64)> = None;
        let mut map = self.entries.write();
        for rec in body.chunks_exact(RECORD) {
            let i = u64::from_le_bytes(rec[0..8].try_into().unwrap());
            let j = u64::from_le_bytes(rec[8..16].try_into().unwrap());
            let v = f64::from_le_bytes(rec[16..24].try_into().unwrap());
            if i > j || prev.is_some_and(|p| p >= (i, j)) {
                return Err(bad("records not sorted by unordered pair"));
            }
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            prev = Some((i, j));
            map.entry((i, j)).or_insert(v);
        }
        Ok(count)
    }

    pub fn save(&self, key: &[u8; 32], path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(key, std::io::BufWriter::new(f))
    }

    pub fn load(&self, key: &[u8; 32], path: &Path) -> Result<usize> {
        self.read_from(key, std::fs::File::open(path)?)
    }
}
