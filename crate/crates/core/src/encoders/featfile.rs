//! `UMCLFEAT` feature-record files, so externally extracted features can
//! bypass the toy encoders.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "UMCLFEAT"
//! version u16      = 1
//! count   u64
//! record × count:
//!   id_len u16, id bytes (UTF-8)
//!   label  u8   0 = fake, 1 = real
//!   quality u8  0 = HQ, 1 = LQ
//!   z  320 × f32
//!   e  128 × f32
//!   t  512 × f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Label, Quality, E_DIM, T_DIM, Z_DIM};

pub const FEAT_MAGIC: &[u8; 8] = b"UMCLFEAT";
pub const FEAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub label: Label,
    pub quality: Quality,
    pub z: Vec<f32>,
    pub e: Vec<f32>,
    pub t: Vec<f32>,
}

impl FeatureRecord {
    pub fn validate(&self) -> Result<()> {
        for (what, v, n) in [("z", &self.z, Z_DIM), ("e", &self.e, E_DIM), ("t", &self.t, T_DIM)] {
            if v.len() != n {
                return Err(Error::DimMismatch {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        if self.id.len() > u16::MAX as usize {
            return Err(Error::Format(format!("id longer than {} bytes", u16::MAX)));
        }
        Ok(())
    }
}

pub fn write_features_to(mut w: impl Write, records: &[FeatureRecord]) -> Result<()> {
    w.write_all(FEAT_MAGIC)?;
    w.write_all(&FEAT_VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        r.validate()?;
        w.write_all(&(r.id.len() as u16).to_le_bytes())?;
        w.write_all(r.id.as_bytes())?;
        w.write_all(&[r.label as u8, matches!(r.quality, Quality::LQ) as u8])?;
        for v in r.z.iter().chain(&r.e).chain(&r.t) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    write_features_to(BufWriter::new(File::create(path)?), records)
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated feature file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    (0..n).map(|_| Ok(f32::from_le_bytes(read_exact::<4>(r)?))).collect()
}

pub fn read_features_from(mut r: impl Read) -> Result<Vec<FeatureRecord>> {
    if &read_exact::<8>(&mut r)? != FEAT_MAGIC {
        return Err(Error::Format("bad feature file magic".into()));
    }
    let version = u16::from_le_bytes(read_exact(&mut r)?);
    if version != FEAT_VERSION {
        return Err(Error::Format(format!("unsupported feature file version {version}")));
    }
    let count = u64::from_le_bytes(read_exact(&mut r)?);
    let mut out = Vec::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut id = vec![0u8; len];
        r.read_exact(&mut id)
            .map_err(|_| Error::Format("truncated record id".into()))?;
        let id = String::from_utf8(id).map_err(|_| Error::Format("record id is not UTF-8".into()))?;
        let [label, quality] = read_exact::<2>(&mut r)?;
        let label = Label::from_index(label).ok_or_else(|| Error::Format(format!("bad label {label}")))?;
        let quality = match quality {
            0 => Quality::HQ,
            1 => Quality::LQ,
            q => return Err(Error::Format(format!("bad quality {q}"))),
        };
        let rec = FeatureRecord {
            id,
            label,
            quality,
            z: read_f32s(&mut r, Z_DIM)?,
            e: read_f32s(&mut r, E_DIM)?,
            t: read_f32s(&mut r, T_DIM)?,
        };
        rec.validate()?;
        out.push(rec);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    Ok(out)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    read_features_from(BufReader::new(File::open(path)?))
}
