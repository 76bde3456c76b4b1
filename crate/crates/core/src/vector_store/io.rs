//! Embedding file formats.
//!
//! Canonical binary layout, little-endian:
//!
//! ```text
//! "EMB1" | u32 version (=1) | u32 dim | u64 count
//! count × ( u16 id_len | id bytes (UTF-8) | dim × f32 )
//! ```
//!
//! Records are fixed-stride apart from the id, so the vectors can be scanned
//! straight out of a mapped file. JSONL (`{"id": "...", "vec": [...]}` per
//! line) is accepted for small fixtures.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingStore, StoreError};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn write_binary<W: Write>(store: &EmbeddingStore, mut out: W) -> Result<(), std::io::Error> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(store.dim() as u32).to_le_bytes())?;
    out.write_all(&(store.len() as u64).to_le_bytes())?;
    for (id, v) in store.iter() {
        let len = u16::try_from(id.len()).map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, StoreError::IdTooLong(id.into()))
        })?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(id.as_bytes())?;
        for x in v {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(StoreError::Truncated(self.bytes.len())),
        }
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_binary(bytes: &[u8]) -> Result<EmbeddingStore, StoreError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(StoreError::Truncated(bytes.len()));
    }
    let mut cur = Cursor { bytes, pos: 4 };
    let version = cur.u32()?;
    if version != VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let dim = cur.u32()? as usize;
    let count = cur.u64()?;
    let mut store = EmbeddingStore::new(dim)?;
    let mut vec = vec![0f32; dim];
    for _ in 0..count {
        let id_len = cur.u16()? as usize;
        let id_at = cur.pos;
        let id = std::str::from_utf8(cur.take(id_len)?).map_err(|_| StoreError::InvalidId(id_at))?;
        let raw = cur.take(dim * 4)?;
        for (slot, chunk) in vec.iter_mut().zip(raw.chunks_exact(4)) {
            *slot = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        store.insert(id.to_string(), &vec)?;
    }
    if cur.pos != bytes.len() {
        return Err(StoreError::TrailingBytes(bytes.len() - cur.pos));
    }
    Ok(store)
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    vec: Vec<f32>,
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<EmbeddingStore, StoreError> {
    let mut store: Option<EmbeddingStore> = None;
    for (i, line) in input.lines().enumerate() {
        let err = |message: String| StoreError::Jsonl {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let s = match store.as_mut() {
            Some(s) => s,
            None => store.insert(EmbeddingStore::new(rec.vec.len())?),
        };
        s.insert(rec.id, &rec.vec)?;
    }
    store.ok_or(StoreError::Jsonl {
        line: 0,
        message: "no records".into(),
    })
}

pub fn write_jsonl<W: Write>(store: &EmbeddingStore, mut out: W) -> std::io::Result<()> {
    for (id, v) in store.iter() {
        let rec = JsonRecord {
            id: id.to_string(),
            vec: v.to_vec(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Loads a binary or JSONL embedding file, sniffing the format from its first
/// bytes.
pub fn load_store(path: &Path) -> Result<EmbeddingStore, StoreError> {
    let bytes = fs::read(path).map_err(|e| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if bytes.starts_with(MAGIC) {
        return read_binary(&bytes);
    }
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => read_jsonl(&bytes[..]),
        _ => Err(StoreError::BadMagic),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EmbeddingStore {
        EmbeddingStore::from_vectors(
            4,
            [
                ("a", [1.0f32, 0.0, 0.0, 0.0]),
                ("bb", [0.0, 2.0, 0.0, 0.0]),
                ("ccc", [1.0, 1.0, 1.0, 1.0]),
            ],
        )
        .unwrap()
    }

    fn encode(store: &EmbeddingStore) -> Vec<u8> {
        let mut buf = Vec::new();
        write_binary(store, &mut buf).unwrap();
        buf
    }

    #[test]
    fn three_vectors_load_unit_norm() {
        let s = read_binary(&encode(&sample())).unwrap();
        assert_eq!((s.dim(), s.len()), (4, 3));
        for (_, v) in s.iter() {
            let n: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-5);
        }
        assert_eq!(s.renormalized_count(), 0);
    }

    fn raw_file(dim: u32, recs: &[(&str, &[f32])]) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.extend(VERSION.to_le_bytes());
        b.extend(dim.to_le_bytes());
        b.extend((recs.len() as u64).to_le_bytes());
        for (id, v) in recs {
            b.extend((id.len() as u16).to_le_bytes());
            b.extend(id.as_bytes());
            for x in *v {
                b.extend(x.to_le_bytes());
            }
        }
        b
    }

    #[test]
    fn raw_vectors_are_normalized() {
        let s = read_binary(&raw_file(2, &[("v", &[3.0, 4.0])])).unwrap();
        assert_eq!(s.get("v").unwrap(), &[0.6f32, 0.8]);
        assert_eq!(s.renormalized_count(), 1);
    }

    #[test]
    fn corrupt_files_rejected() {
        assert_eq!(
            read_binary(&raw_file(2, &[("z", &[0.0, 0.0])])),
            Err(StoreError::ZeroVector("z".into()))
        );
        assert_eq!(
            read_binary(&raw_file(2, &[("a", &[1.0, 0.0]), ("a", &[0.0, 1.0])])),
            Err(StoreError::DuplicateId("a".into()))
        );
        let good = raw_file(2, &[("a", &[1.0, 0.0])]);
        assert_eq!(
            read_binary(&good[..good.len() - 3]),
            Err(StoreError::Truncated(good.len() - 3))
        );
        let mut trailing = good.clone();
        trailing.push(0);
        assert_eq!(read_binary(&trailing), Err(StoreError::TrailingBytes(1)));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(read_binary(&bad), Err(StoreError::BadMagic));
        let mut v2 = good.clone();
        v2[4] = 2;
        assert_eq!(read_binary(&v2), Err(StoreError::UnsupportedVersion(2)));
        assert_eq!(read_binary(&raw_file(0, &[])), Err(StoreError::ZeroDim));
    }

    #[test]
    fn jsonl_fixture_and_dim_mismatch() {
        let src = "{\"id\":\"a\",\"vec\":[3,4]}\n\n{\"id\":\"b\",\"vec\":[0,1]}\n";
        let s = read_jsonl(src.as_bytes()).unwrap();
        assert_eq!(s.get("a").unwrap(), &[0.6f32, 0.8]);
        let bad = "{\"id\":\"a\",\"vec\":[3,4]}\n{\"id\":\"b\",\"vec\":[1]}\n";
        assert!(matches!(
            read_jsonl(bad.as_bytes()),
            Err(StoreError::DimMismatch { expected: 2, found: 1, .. })
        ));
        assert!(matches!(read_jsonl("nope\n".as_bytes()), Err(StoreError::Jsonl { line: 1, .. })));
    }

    #[test]
    fn load_sniffs_format() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("v.emb");
        fs::write(&bin, encode(&sample())).unwrap();
        let json = dir.path().join("v.jsonl");
        let mut buf = Vec::new();
        write_jsonl(&sample(), &mut buf).unwrap();
        fs::write(&json, buf).unwrap();
        assert_eq!(load_store(&bin).unwrap(), sample());
        assert_eq!(load_store(&json).unwrap(), sample());
        fs::write(dir.path().join("junk"), "hello").unwrap();
        assert_eq!(load_store(&dir.path().join("junk")), Err(StoreError::BadMagic));
    }

    proptest! {
        #[test]
        fn binary_round_trip(
            dim in 1usize..24,
            seeds in proptest::collection::btree_map("[a-zA-Z0-9_]{1,10}", any::<u64>(), 0..20),
        ) {
            use rand::{Rng, SeedableRng};
            let store = EmbeddingStore::from_vectors(
                dim,
                seeds.iter().map(|(id, seed)| {
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                    let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(0.1f32..2.0)).collect();
                    (id.clone(), v)
                }),
            ).unwrap();
            prop_assert_eq!(&read_binary(&encode(&store)).unwrap(), &store);
        }
    }
}
