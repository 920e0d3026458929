//! Little-endian record container shared by parameter checkpoints and
//! feature files.
//!
//! Layout: magic `EMVC`, format version (u32), config hash (u64), then any
//! number of records until end of file. A record is the name length (u32),
//! UTF-8 name bytes, rank (u32), one u64 per extent, and the raw `f64`
//! values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{NdError, Result};
use crate::tensor::numel;

pub const MAGIC: &[u8; 4] = b"EMVC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Record {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Self {
        let r = Self {
            name: name.into(),
            shape,
            values,
        };
        debug_assert_eq!(numel(&r.shape), r.values.len(), "record {}", r.name);
        r
    }

    pub fn scalar(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, Vec::new(), vec![value])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub config_hash: u64,
    pub records: Vec<Record>,
}

impl Checkpoint {
    pub fn new(config_hash: u64) -> Self {
        Self {
            config_hash,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = Record>) {
        self.records.extend(records);
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Record> {
        self.get(name)
            .ok_or_else(|| NdError::Format(format!("missing record {name}")))
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        let r = self.require(name)?;
        match r.values.as_slice() {
            [v] => Ok(*v),
            _ => Err(NdError::Format(format!("record {name} is not a scalar"))),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u64::<LittleEndian>(self.config_hash)?;
        for r in &self.records {
            if numel(&r.shape) != r.values.len() {
                return Err(NdError::Format(format!(
                    "record {} has shape {:?} but {} values",
                    r.name,
                    r.shape,
                    r.values.len()
                )));
            }
            let name = r.name.as_bytes();
            w.write_u32::<LittleEndian>(name.len() as u32)?;
            w.write_all(name)?;
            w.write_u32::<LittleEndian>(r.shape.len() as u32)?;
            for &e in &r.shape {
                w.write_u64::<LittleEndian>(e as u64)?;
            }
            for &v in &r.values {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NdError::Format(format!("bad magic {magic:?}")));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(NdError::Format(format!("unsupported format version {version}")));
        }
        let config_hash = r.read_u64::<LittleEndian>()?;
        let mut records = Vec::new();
        loop {
            let name_len = match r.read_u32::<LittleEndian>() {
                Ok(n) => n as usize,
                Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            };
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| NdError::Format("record name is not UTF-8".into()))?;
            let rank = r.read_u32::<LittleEndian>()? as usize;
            let shape = (0..rank)
                .map(|_| r.read_u64::<LittleEndian>().map(|e| e as usize))
                .collect::<std::io::Result<Vec<_>>>()?;
            let mut values = vec![0.0; numel(&shape)];
            r.read_f64_into::<LittleEndian>(&mut values)?;
            records.push(Record { name, shape, values });
        }
        Ok(Self {
            config_hash,
            records,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let mut ck = Checkpoint::new(0x0102_0304_0506_0708);
        ck.push(Record::new("w", vec![2], vec![1.0, -0.5]));
        let bytes = ck.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"EMVC");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &0x0102_0304_0506_0708u64.to_le_bytes());
        assert_eq!(&bytes[16..20], &1u32.to_le_bytes());
        assert_eq!(bytes[20], b'w');
        assert_eq!(&bytes[21..25], &1u32.to_le_bytes());
        assert_eq!(&bytes[25..33], &2u64.to_le_bytes());
        assert_eq!(&bytes[33..41], &1.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 49);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut ck = Checkpoint::new(7);
        ck.push(Record::new("a", vec![3], vec![1.0, 2.0, 3.0]));
        let mut bytes = ck.to_bytes().unwrap();
        let truncated = &bytes[..bytes.len() - 3];
        assert!(Checkpoint::read_from(&mut &truncated[..]).is_err());
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&mut &bytes[..]), Err(NdError::Format(_))));
    }
}
