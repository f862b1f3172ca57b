//! Atomic file output and the little-endian codec shared by the binary formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Write `bytes` to a sibling temporary file, sync it, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Append-only little-endian encoder.
#[derive(Debug, Default)]
pub(crate) struct ByteWriter(pub Vec<u8>);

impl ByteWriter {
    pub fn u(&mut self, v: usize) {
        self.0.extend((v as u64).to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.0.extend(v.to_le_bytes());
    }
    pub fn f(&mut self, v: f64) {
        self.0.extend(v.to_le_bytes());
    }
    /// Length-prefixed float array.
    pub fn fs(&mut self, v: &[f64]) {
        self.u(v.len());
        for x in v {
            self.f(*x);
        }
    }
    /// Append the SHA-256 of everything written so far and return the buffer.
    pub fn seal(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.0);
        self.0.extend(digest);
        self.0
    }
}

/// Cursor over a sealed buffer.
pub(crate) struct ByteReader<'a> {
    pub buf: &'a [u8],
    pub pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    /// Check `magic`, `version` and the trailing digest; the reader starts after the version.
    pub fn open(buf: &'a [u8], magic: &[u8; 8], version: u32, what: &'static str) -> Result<Self> {
        if buf.len() < 12 + 32 || &buf[..8] != magic {
            return Err(Error::Format(format!("not a {what}")));
        }
        let found = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
        if found != version {
            return Err(Error::Format(format!("unsupported {what} version {found}")));
        }
        let (body, tail) = buf.split_at(buf.len() - 32);
        let digest = Sha256::digest(body);
        if digest.as_slice() != tail {
            return Err(Error::HashMismatch {
                expected: hex::encode(tail),
                found: hex::encode(digest),
            });
        }
        Ok(Self { buf: body, pos: 12, what })
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.buf.len() - self.pos {
            return Err(Error::Format(format!("{} truncated", self.what)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    pub fn u(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("integer overflow".into()))
    }
    pub fn f(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    pub fn fs(&mut self) -> Result<Vec<f64>> {
        let n = self.u()?;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(Error::Format(format!("array length exceeds {} size", self.what)));
        }
        (0..n).map(|_| self.f()).collect()
    }
    /// Count that must fit in the remaining bytes at `min_bytes` each.
    pub fn count(&mut self, min_bytes: usize) -> Result<usize> {
        let n = self.u()?;
        if n.saturating_mul(min_bytes.max(1)) > self.buf.len() - self.pos {
            return Err(Error::Format(format!("implausible count in {}", self.what)));
        }
        Ok(n)
    }
    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("trailing bytes in {}", self.what)));
        }
        Ok(())
    }
}
