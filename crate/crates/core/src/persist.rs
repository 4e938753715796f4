//! Little-endian binary encoding shared by every persisted structure.
//!
//! Every structure is written as a sequence of tagged sections: a four byte
//! tag, a `u64` payload length, then the payload. Readers check tags and
//! lengths strictly so truncated or reordered files are rejected instead of
//! being misread.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn u64s(&mut self, v: &[u64]) {
        self.usize(v.len());
        for &x in v {
            self.u64(x);
        }
    }

    pub fn u32s(&mut self, v: &[u32]) {
        self.usize(v.len());
        for &x in v {
            self.u32(x);
        }
    }

    pub fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.bytes(s.as_bytes());
    }

    /// Writes `tag`, a length placeholder, the payload produced by `body`,
    /// then patches the length.
    pub fn section(&mut self, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
        self.bytes(tag);
        let at = self.buf.len();
        self.u64(0);
        let start = self.buf.len();
        body(self);
        let len = (self.buf.len() - start) as u64;
        self.buf[at..at + 8].copy_from_slice(&len.to_le_bytes());
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format(format!(
                "unexpected end of data: wanted {n} bytes, {} left",
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::format(format!("length {v} does not fit usize")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn count(&mut self, elem_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.checked_mul(elem_bytes).is_none_or(|b| b > self.remaining()) {
            return Err(Error::format(format!("array of {n} elements overruns data")));
        }
        Ok(n)
    }

    pub fn u64s(&mut self) -> Result<Vec<u64>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.u64()).collect()
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.count(4)?;
        (0..n).map(|_| self.u32()).collect()
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::format("string is not UTF-8"))
    }

    pub fn expect_bytes(&mut self, want: &[u8], what: &str) -> Result<()> {
        let got = self.take(want.len())?;
        if got != want {
            return Err(Error::format(format!(
                "bad {what}: expected {:?}, found {:?}",
                String::from_utf8_lossy(want),
                String::from_utf8_lossy(got)
            )));
        }
        Ok(())
    }

    /// Reads a section with the given tag and returns a reader over its
    /// payload.
    pub fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        self.expect_bytes(tag, "section tag")?;
        let len = self.usize()?;
        Ok(Reader::new(self.take(len)?))
    }

    /// Peeks at the next section tag without consuming it.
    pub fn peek_tag(&self) -> Option<[u8; 4]> {
        self.buf
            .get(self.pos..self.pos + 4)
            .map(|s| s.try_into().unwrap())
    }

    pub fn finish(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::format(format!(
                "{} trailing bytes after {what}",
                self.remaining()
            )))
        }
    }
}

/// Types with a stable binary encoding.
pub trait Persist: Sized {
    fn write_to(&self, w: &mut Writer);
    fn read_from(r: &mut Reader<'_>) -> Result<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_to(&mut w);
        w.into_bytes()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let v = Self::read_from(&mut r)?;
        r.finish("structure")?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_nest_and_reject_truncation() {
        let mut w = Writer::new();
        w.section(b"TEST", |w| {
            w.u32(7);
            w.u64s(&[1, 2, 3]);
            w.str("hi");
        });
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        let mut s = r.section(b"TEST").unwrap();
        assert_eq!(s.u32().unwrap(), 7);
        assert_eq!(s.u64s().unwrap(), vec![1, 2, 3]);
        assert_eq!(s.string().unwrap(), "hi");
        s.finish("test").unwrap();
        r.finish("outer").unwrap();

        let mut r = Reader::new(&bytes[..bytes.len() - 1]);
        assert!(r.section(b"TEST").is_err());
        let mut r = Reader::new(&bytes);
        assert!(r.section(b"NOPE").is_err());
    }
}
