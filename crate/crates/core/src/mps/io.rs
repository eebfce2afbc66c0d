//! Binary container for MPS tensors.
//!
//! Layout (all little-endian): magic `b"S1MPS\0\0\0"`, `u32` version, `u32`
//! chain length, `u32` junction flag, `u32` junction size, `u32` canonical
//! center (`u32::MAX` when unset), `u32` site count, three `u32` extents per
//! site, then every tensor's entries as `(re, im)` pairs of `f64`.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use super::{ChainLayout, Mps};
use crate::error::{Error, Result};
use crate::linalg::DenseTensor;

const MAGIC: &[u8; 8] = b"S1MPS\0\0\0";
pub const FORMAT_VERSION: u32 = 1;

fn put(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn to_u32(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Format(format!("value {x} does not fit in u32")))
}

pub fn write_mps(state: &Mps, w: &mut impl Write) -> Result<()> {
    let layout = state.layout();
    w.write_all(MAGIC)?;
    put(w, FORMAT_VERSION)?;
    put(w, to_u32(layout.length())?)?;
    put(w, layout.junction().is_some() as u32)?;
    put(w, to_u32(layout.junction().unwrap_or(0))?)?;
    put(w, state.center().map(to_u32).transpose()?.unwrap_or(u32::MAX))?;
    put(w, to_u32(state.n_sites())?)?;
    for t in state.tensors() {
        for &e in t.shape() {
            put(w, to_u32(e)?)?;
        }
    }
    let mut buf = Vec::new();
    for t in state.tensors() {
        buf.clear();
        for z in t.data() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_mps(r: &mut impl Read) -> Result<Mps> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = get(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let length = get(r)? as usize;
    let blocked = get(r)?;
    let junction = get(r)? as usize;
    let layout = match blocked {
        0 => ChainLayout::uniform(length),
        1 => ChainLayout::blocked(length, junction),
        x => return Err(Error::Format(format!("bad junction flag {x}"))),
    }
    .map_err(|e| Error::Format(e.to_string()))?;
    let center = match get(r)? {
        u32::MAX => None,
        c => Some(c as usize),
    };
    let n = get(r)? as usize;
    if n != layout.n_sites() {
        return Err(Error::Format(format!("{n} sites recorded for a {}-site layout", layout.n_sites())));
    }
    let mut shapes = Vec::with_capacity(n);
    for _ in 0..n {
        let s = [get(r)? as usize, get(r)? as usize, get(r)? as usize];
        if s.iter().any(|&e| e == 0 || e > 1 << 16) {
            return Err(Error::Format(format!("implausible tensor shape {s:?}")));
        }
        shapes.push(s);
    }
    let mut tensors = Vec::with_capacity(n);
    for s in shapes {
        let len = s[0] * s[1] * s[2];
        let mut bytes = vec![0u8; len * 16];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        tensors.push(DenseTensor::from_vec(&s, data)?);
    }
    let mut out = Mps::new(layout, tensors).map_err(|e| Error::Format(e.to_string()))?;
    if let Some(c) = center {
        if c >= n {
            return Err(Error::Format(format!("center {c} out of range")));
        }
    }
    out.set_center(center);
    Ok(out)
}
