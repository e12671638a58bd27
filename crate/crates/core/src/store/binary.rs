//! "FSEB" little-endian container.
//!
//! ```text
//! magic  "FSEB"        4 bytes
//! version u16 = 1
//! dim     u32
//! count   u64
//! count × { record_id u64, group_id u64, class_label u32, dim × f64 }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbeddingDataset, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const BINARY_MAGIC: &[u8; 4] = b"FSEB";
pub const BINARY_VERSION: u16 = 1;

pub fn write_binary<T: Real>(dataset: &EmbeddingDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    encode(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_binary<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingDataset<T>> {
    let mut input = BufReader::new(File::open(path)?);
    decode(&mut input)
}

pub(crate) fn encode<T: Real, W: Write>(dataset: &EmbeddingDataset<T>, out: &mut W) -> Result<()> {
    let dim = u32::try_from(dataset.dim()).map_err(|_| Error::MalformedHeader("dimensionality exceeds u32".into()))?;
    out.write_all(BINARY_MAGIC)?;
    out.write_u16::<LittleEndian>(BINARY_VERSION)?;
    out.write_u32::<LittleEndian>(dim)?;
    out.write_u64::<LittleEndian>(dataset.len() as u64)?;
    for r in dataset.records() {
        out.write_u64::<LittleEndian>(r.record_id)?;
        out.write_u64::<LittleEndian>(r.group_id)?;
        out.write_u32::<LittleEndian>(r.class_label)?;
        for &v in &r.vector {
            out.write_f64::<LittleEndian>(v.to_f64_lossy())?;
        }
    }
    Ok(())
}

pub(crate) fn decode<T: Real, R: Read>(input: &mut R) -> Result<EmbeddingDataset<T>> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::MalformedHeader("file shorter than header".into()))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::MalformedHeader(format!("bad magic {magic:?}")));
    }
    let header = (|| -> std::io::Result<(u16, u32, u64)> {
        Ok((
            input.read_u16::<LittleEndian>()?,
            input.read_u32::<LittleEndian>()?,
            input.read_u64::<LittleEndian>()?,
        ))
    })()
    .map_err(|_| Error::MalformedHeader("truncated header".into()))?;
    let (version, dim, count) = header;
    if version != BINARY_VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {version}")));
    }
    if dim == 0 {
        return Err(Error::MalformedHeader("dimensionality must be at least 1".into()));
    }
    let dim = dim as usize;

    // The count comes from the file; cap the preallocation.
    let mut records = Vec::with_capacity(count.min(1 << 16) as usize);
    for i in 0..count as usize {
        let row = i + 1;
        let truncated = |e: std::io::Error| match e.kind() {
            ErrorKind::UnexpectedEof => Error::MalformedRow {
                row,
                message: "file truncated".into(),
            },
            _ => Error::Io(e),
        };
        let record_id = input.read_u64::<LittleEndian>().map_err(truncated)?;
        let group_id = input.read_u64::<LittleEndian>().map_err(truncated)?;
        let class_label = input.read_u32::<LittleEndian>().map_err(truncated)?;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(T::lit(input.read_f64::<LittleEndian>().map_err(truncated)?));
        }
        records.push(EmbeddingRecord {
            record_id,
            group_id,
            class_label,
            vector,
        });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::MalformedRow {
            row: count as usize + 1,
            message: "trailing bytes after the declared record count".into(),
        });
    }
    EmbeddingDataset::new(dim, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingDataset<f64> {
        EmbeddingDataset::new(
            2,
            vec![
                EmbeddingRecord {
                    record_id: 1,
                    group_id: 1,
                    class_label: 0,
                    vector: vec![0.1, 0.2],
                },
                EmbeddingRecord {
                    record_id: 2,
                    group_id: 1,
                    class_label: 0,
                    vector: vec![-0.0, 1e-300],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        encode(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FSEB");
        assert_eq!(&buf[4..6], &[1, 0]);
        assert_eq!(&buf[6..10], &[2, 0, 0, 0]);
        assert_eq!(&buf[10..18], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(buf.len(), 18 + 2 * (8 + 8 + 4 + 2 * 8));
        // first vector entry of record 1
        let off = 18 + 20;
        assert_eq!(&buf[off..off + 8], &0.1f64.to_le_bytes());
    }

    #[test]
    fn preserves_bits() {
        let mut buf = Vec::new();
        encode(&sample(), &mut buf).unwrap();
        let back: EmbeddingDataset<f64> = decode(&mut buf.as_slice()).unwrap();
        assert_eq!(back.records()[0].vector[0].to_bits(), 0.1f64.to_bits());
        assert_eq!(back.records()[0].vector[1].to_bits(), 0.2f64.to_bits());
        assert_eq!(back.records()[1].vector[0].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, sample());
    }

    #[test]
    fn rejects_bad_headers_and_truncation() {
        let mut buf = Vec::new();
        encode(&sample(), &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode::<f64, _>(&mut bad_magic.as_slice()),
            Err(Error::MalformedHeader(_))
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 2;
        assert!(matches!(
            decode::<f64, _>(&mut bad_version.as_slice()),
            Err(Error::MalformedHeader(_))
        ));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            decode::<f64, _>(&mut &truncated[..]),
            Err(Error::MalformedRow { row: 2, .. })
        ));

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(matches!(
            decode::<f64, _>(&mut trailing.as_slice()),
            Err(Error::MalformedRow { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_payload() {
        let mut buf = Vec::new();
        encode(&sample(), &mut buf).unwrap();
        let off = 18 + 20 + 8;
        buf[off..off + 8].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(
            decode::<f64, _>(&mut buf.as_slice()),
            Err(Error::NonFiniteValue { row: 1, column: 1 })
        ));
    }
}
