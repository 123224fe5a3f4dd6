//! The GTF1 field container.
//!
//! ```text
//! "GTF1" | u8 tag | u8 rank | rank × (u64 count, count × f64 point)
//!        | interleaved (re, im) f64 values, row-major | u32 CRC32
//! ```
//! All integers and floats are little-endian. The CRC covers every byte
//! between the magic and the checksum.

use std::path::Path;

use semigabor::presets::Grids;
use semigabor::{
    Complex64, GaborField, GroupDescriptor, OtimesGaborField, OtimesStorage, ProductGrid, SliceField,
    TransformField, TransformKind,
};

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"GTF1";

/// Kind tags. G-kinds stored on the diagonal only get their own tags since
/// their layout differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    V = 0,
    Vdag = 1,
    A = 2,
    B = 3,
    G = 4,
    Gdag = 5,
    GDiagonal = 6,
    GdagDiagonal = 7,
    Signal = 8,
}

impl Tag {
    pub fn from_u8(v: u8) -> Option<Self> {
        use Tag::*;
        [V, Vdag, A, B, G, Gdag, GDiagonal, GdagDiagonal, Signal].into_iter().find(|t| *t as u8 == v)
    }

    pub fn transform_kind(self) -> Option<TransformKind> {
        Some(match self {
            Tag::V => TransformKind::V,
            Tag::Vdag => TransformKind::Vdag,
            Tag::A => TransformKind::A,
            Tag::B => TransformKind::B,
            Tag::G | Tag::GDiagonal => TransformKind::G,
            Tag::Gdag | Tag::GdagDiagonal => TransformKind::Gdag,
            Tag::Signal => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawField {
    pub tag: Tag,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

pub fn encode(raw: &RawField) -> Vec<u8> {
    let n_points: usize = raw.axes.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(4 + 2 + raw.axes.len() * 8 + n_points * 8 + raw.values.len() * 16 + 4);
    out.extend_from_slice(&MAGIC);
    out.push(raw.tag as u8);
    out.push(raw.axes.len() as u8);
    for axis in &raw.axes {
        out.extend_from_slice(&(axis.len() as u64).to_le_bytes());
        for p in axis {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    for v in &raw.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[4..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }
    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<RawField> {
    let bad = |message: &str| CliError::Format { path: path.to_path_buf(), message: message.to_string() };
    if bytes.len() < 10 || bytes[..4] != MAGIC {
        return Err(bad("not a GTF1 file"));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(&body[4..]) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(bad("CRC32 mismatch"));
    }
    let mut r = Reader { bytes: body, pos: 4 };
    let tag = r.u8().and_then(Tag::from_u8).ok_or_else(|| bad("unknown kind tag"))?;
    let rank = r.u8().ok_or_else(|| bad("truncated header"))? as usize;
    let mut axes = Vec::with_capacity(rank);
    let mut total: usize = 1;
    for _ in 0..rank {
        let count = r.u64().ok_or_else(|| bad("truncated axis header"))? as usize;
        if count > (body.len() - r.pos) / 8 {
            return Err(bad("axis longer than file"));
        }
        total = total.checked_mul(count).ok_or_else(|| bad("field size overflows"))?;
        axes.push((0..count).map(|_| r.f64().unwrap()).collect());
    }
    if body.len() - r.pos != total.checked_mul(16).ok_or_else(|| bad("field size overflows"))? {
        return Err(bad("value count does not match the axes"));
    }
    let values = (0..total).map(|_| Complex64::new(r.f64().unwrap(), r.f64().unwrap())).collect();
    Ok(RawField { tag, axes, values })
}

pub fn write(path: &Path, raw: &RawField) -> Result<()> {
    std::fs::write(path, encode(raw)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<RawField> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}

fn axes_of(grids: &[&ProductGrid]) -> Vec<Vec<f64>> {
    grids.iter().flat_map(|g| g.axes().iter().map(|a| a.points().to_vec())).collect()
}

pub fn from_transform(field: &TransformField) -> RawField {
    match field {
        TransformField::Gabor(f) => {
            let tag = match f.kind {
                TransformKind::V => Tag::V,
                TransformKind::Vdag => Tag::Vdag,
                TransformKind::A => Tag::A,
                _ => Tag::B,
            };
            RawField { tag, axes: axes_of(&[&f.h_grid, &f.k_grid, &f.freq_grid]), values: f.values.clone() }
        }
        TransformField::Otimes(f) => {
            let full = f.storage == OtimesStorage::Full;
            let tag = match (f.kind, full) {
                (TransformKind::G, true) => Tag::G,
                (TransformKind::G, false) => Tag::GDiagonal,
                (_, true) => Tag::Gdag,
                (_, false) => Tag::GdagDiagonal,
            };
            let axes = if full {
                axes_of(&[&f.h_grid, &f.k_grid, &f.h_grid, &f.freq_grid])
            } else {
                axes_of(&[&f.h_grid, &f.k_grid, &f.freq_grid])
            };
            RawField { tag, axes, values: f.values.clone() }
        }
    }
}

pub fn from_signal(f: &SliceField) -> RawField {
    RawField { tag: Tag::Signal, axes: axes_of(&[f.h_grid(), f.k_grid()]), values: f.values().to_vec() }
}

fn check_axes(raw: &RawField, expected: &[&ProductGrid], path: &Path) -> Result<()> {
    if raw.axes != axes_of(expected) {
        return Err(CliError::Config(format!("{}: field axes do not match the configured grids", path.display())));
    }
    Ok(())
}

/// Rebuilds a transform field, requiring its axes to equal `grids` bit for bit.
pub fn to_transform(raw: RawField, group: &GroupDescriptor, grids: &Grids, path: &Path) -> Result<TransformField> {
    let kind = raw
        .tag
        .transform_kind()
        .ok_or_else(|| CliError::Config(format!("{}: holds a signal, not a transform field", path.display())))?;
    let (h, k, w) = (grids.h.clone(), grids.k.clone(), grids.freq.clone());
    Ok(match raw.tag {
        Tag::V | Tag::Vdag | Tag::A | Tag::B => {
            check_axes(&raw, &[&h, &k, &w], path)?;
            TransformField::Gabor(GaborField { kind, group: group.clone(), h_grid: h, k_grid: k, freq_grid: w, values: raw.values })
        }
        _ => {
            let full = matches!(raw.tag, Tag::G | Tag::Gdag);
            if full {
                check_axes(&raw, &[&h, &k, &h, &w], path)?;
            } else {
                check_axes(&raw, &[&h, &k, &w], path)?;
            }
            TransformField::Otimes(OtimesGaborField {
                kind,
                group: group.clone(),
                h_grid: h,
                k_grid: k,
                freq_grid: w,
                storage: if full { OtimesStorage::Full } else { OtimesStorage::Diagonal },
                values: raw.values,
            })
        }
    })
}

pub fn to_signal(raw: RawField, group: &GroupDescriptor, grids: &Grids, path: &Path) -> Result<SliceField> {
    if raw.tag != Tag::Signal {
        return Err(CliError::Config(format!("{}: holds a transform field, not a signal", path.display())));
    }
    check_axes(&raw, &[&grids.h, &grids.k], path)?;
    Ok(SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), raw.values)?)
}
