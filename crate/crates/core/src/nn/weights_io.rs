//! Binary weights file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SMWT"  u16 version  u32 entry_count
//! per entry: u16 name_len, name (UTF-8), u8 rank, rank × u32 extents, f32 payload
//! u32 CRC32 over the concatenated payload bytes of every entry
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"SMWT";
pub const FORMAT_VERSION: u16 = 1;

/// Named tensors, iterated in name order.
pub type WeightSet = BTreeMap<String, Tensor>;

pub fn write_weights<W: Write>(mut out: W, set: &WeightSet) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let count = u32::try_from(set.len()).map_err(|_| Error::Argument("too many entries".into()))?;
    buf.extend_from_slice(&count.to_le_bytes());
    let mut crc = crc32fast::Hasher::new();
    for (name, t) in set {
        if !t.is_finite() {
            return Err(Error::format(name, "tensor contains non-finite values"));
        }
        let name_len = u16::try_from(name.len())
            .map_err(|_| Error::format(name, "entry name longer than 65535 bytes"))?;
        let rank = u8::try_from(t.rank()).map_err(|_| Error::format(name, "rank exceeds 255"))?;
        buf.extend_from_slice(&name_len.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(rank);
        for &e in t.shape() {
            let e = u32::try_from(e).map_err(|_| Error::format(name, "extent exceeds u32"))?;
            buf.extend_from_slice(&e.to_le_bytes());
        }
        let start = buf.len();
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        crc.update(&buf[start..]);
    }
    buf.extend_from_slice(&crc.finalize().to_le_bytes());
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(what, "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_weights<R: Read>(mut input: R) -> Result<WeightSet> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4, "header")? != MAGIC {
        return Err(Error::format("header", "bad magic bytes"));
    }
    let version = cur.u16("header")?;
    if version != FORMAT_VERSION {
        return Err(Error::format("header", format!("unsupported version {version}")));
    }
    let count = cur.u32("header")?;
    let mut set = WeightSet::new();
    let mut crc = crc32fast::Hasher::new();
    for index in 0..count {
        let what = format!("entry #{index}");
        let name_len = cur.u16(&what)? as usize;
        let name = std::str::from_utf8(cur.take(name_len, &what)?)
            .map_err(|_| Error::format(&what, "entry name is not UTF-8"))?
            .to_string();
        let rank = cur.u8(&name)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32(&name)? as usize);
        }
        let len = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::format(&name, "payload size overflows"))?;
        let payload = cur.take(len, &name)?;
        crc.update(payload);
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(&shape, data).map_err(|e| Error::format(&name, e.to_string()))?;
        if set.insert(name.clone(), t).is_some() {
            return Err(Error::format(&name, "duplicate entry name"));
        }
    }
    let stored = cur.u32("checksum")?;
    if stored != crc.finalize() {
        return Err(Error::format("checksum", "CRC32 mismatch"));
    }
    if cur.pos != bytes.len() {
        return Err(Error::format("trailer", "trailing bytes after checksum"));
    }
    Ok(set)
}

pub fn save_weights(path: impl AsRef<Path>, set: &WeightSet) -> Result<()> {
    let mut buf = Vec::new();
    write_weights(&mut buf, set)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightSet> {
    read_weights(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> WeightSet {
        let mut set = WeightSet::new();
        set.insert(
            "a.weight".into(),
            Tensor::from_fn(&[2, 3], |i| i as f32 * 0.5 - 1.0).unwrap(),
        );
        set.insert("b".into(), Tensor::new(&[1], vec![f32::MIN_POSITIVE]).unwrap());
        set
    }

    fn encode(set: &WeightSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_weights(&mut buf, set).unwrap();
        buf
    }

    #[test]
    fn empty_set_is_valid() {
        let buf = encode(&WeightSet::new());
        assert_eq!(buf.len(), 4 + 2 + 4 + 4);
        assert!(read_weights(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn checksum_mismatch_is_detected() {
        let mut buf = encode(&sample());
        let n = buf.len();
        buf[n - 6] ^= 0x40; // inside the last payload
        match read_weights(&buf[..]) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "checksum"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_names_the_entry() {
        let buf = encode(&sample());
        match read_weights(&buf[..buf.len() - 8]) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "b"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_weights(&b"SMWX\x01\x00\x00\x00\x00\x00"[..]).is_err());
    }

    #[test]
    fn non_finite_tensors_are_rejected() {
        let mut set = sample();
        set.insert("bad".into(), Tensor::new(&[1], vec![f32::NAN]).unwrap());
        assert!(write_weights(Vec::new(), &set).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.smwt");
        save_weights(&path, &sample()).unwrap();
        assert_eq!(load_weights(&path).unwrap(), sample());
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(
            entries in prop::collection::btree_map(
                "[a-z.]{1,12}",
                (prop::collection::vec(1usize..4, 1..4), any::<u32>()),
                0..5,
            )
        ) {
            let mut set = WeightSet::new();
            for (name, (shape, seed)) in entries {
                let t = Tensor::from_fn(&shape, |i| {
                    f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32) % 0x7f00_0000)
                }).unwrap();
                set.insert(name, t);
            }
            let back = read_weights(&encode(&set)[..]).unwrap();
            prop_assert_eq!(back.len(), set.len());
            for (k, v) in &set {
                let b = &back[k];
                prop_assert_eq!(b.shape(), v.shape());
                prop_assert!(b.data().iter().zip(v.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
