//! Binary field snapshots (`GLF1`) and report emission.
//!
//! Layout, little-endian: magic `GLF1`, `u32` dim, `u32` node count per axis,
//! `f64` spacing, `f64` epsilon, `u8` topology code, then interleaved
//! `(re, im)` pairs in storage order with `NaN` pairs on masked nodes.
//! Readers that stop after the payload see exactly that layout; the grid
//! origin and disk geometry follow in an optional `GEO1` trailer so that
//! arbitrary grids round-trip.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{GridSpec, Topology};

const MAGIC: &[u8; 4] = b"GLF1";
const TRAILER: &[u8; 4] = b"GEO1";

pub fn encode_field(u: &ComplexField) -> Vec<u8> {
    let g = u.grid();
    let dim = g.ndim();
    let mut out = Vec::with_capacity(32 + 16 * g.len() + 52);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for &n in &g.dims()[..dim] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.spacing().to_le_bytes());
    out.extend_from_slice(&u.epsilon().to_le_bytes());
    out.push(g.topology().code());
    for (v, a) in u.values().iter().zip(u.active()) {
        let (re, im) = if *a { (v.re, v.im) } else { (f64::NAN, f64::NAN) };
        out.extend_from_slice(&re.to_le_bytes());
        out.extend_from_slice(&im.to_le_bytes());
    }
    out.extend_from_slice(TRAILER);
    for o in g.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    let (c, r) = match g.topology() {
        Topology::Disk { center, radius } => (center, radius),
        _ => ([0.0, 0.0], 0.0),
    };
    for v in [c[0], c[1], r] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Truncated(self.buf.len()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_field(buf: &[u8]) -> Result<ComplexField> {
    let mut r = Reader { buf, pos: 0 };
    let magic: [u8; 4] = match buf.get(..4) {
        Some(m) => m.try_into().unwrap(),
        None => return Err(Error::Truncated(buf.len())),
    };
    if &magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    r.pos = 4;
    let dim = r.u32()?;
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidField(format!("dimension {dim} is not 2 or 3")));
    }
    let mut dims = [1usize; 3];
    for d in dims.iter_mut().take(dim as usize) {
        *d = r.u32()? as usize;
    }
    let h = r.f64()?;
    let eps = r.f64()?;
    let code = r.take(1)?[0];
    let len = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| Error::InvalidField("node count overflows".into()))?;
    let mut values = Vec::with_capacity(len.min(buf.len() / 16));
    for _ in 0..len {
        let re = r.f64()?;
        let im = r.f64()?;
        values.push(Complex64::new(re, im));
    }
    // Optional geometry trailer; without it grids are centered on the origin.
    let cells = |n: usize| (n as f64 - 1.0) * h;
    let mut origin = [-0.5 * cells(dims[0]), -0.5 * cells(dims[1]), 0.0];
    let mut disk = ([0.0, 0.0], 0.5 * cells(dims[0]));
    if buf.len() >= r.pos + 4 && &buf[r.pos..r.pos + 4] == TRAILER {
        r.pos += 4;
        for o in origin.iter_mut() {
            *o = r.f64()?;
        }
        disk = ([r.f64()?, r.f64()?], r.f64()?);
    }
    let topology = match (dim, code) {
        (2, 0) => Topology::Rectangle,
        (2, 1) => Topology::Disk {
            center: disk.0,
            radius: disk.1,
        },
        (3, 2) => Topology::Cylinder,
        _ => return Err(Error::BadTopology { code, dim }),
    };
    let grid = GridSpec::from_raw(dims, dim as usize, h, origin, topology)?;
    let active = grid.active_mask();
    if let Some(idx) = (0..len).find(|&i| active[i] && (values[i].re.is_nan() || values[i].im.is_nan())) {
        return Err(Error::NanInActive(idx));
    }
    ComplexField::new(grid, values, eps)
}

pub fn dump_field(u: &ComplexField, path: &Path) -> Result<()> {
    write_atomic(path, &encode_field(u))
}

pub fn load_field(path: &Path) -> Result<ComplexField> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&buf)
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Bitwise equality of grids, epsilon and every active value.
pub fn bit_identical(a: &ComplexField, b: &ComplexField) -> bool {
    a.grid() == b.grid()
        && a.epsilon().to_bits() == b.epsilon().to_bits()
        && a.active() == b.active()
        && a.values().iter().zip(b.values()).zip(a.active()).all(|((x, y), act)| {
            if *act {
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            } else {
                x.re.is_nan() && y.re.is_nan() && x.im.is_nan() && y.im.is_nan()
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grids = [
            GridSpec::rectangle(9, 12, 0.1, [0.3, -0.7]).unwrap(),
            GridSpec::disk([0.25, 0.0], 0.8, 0.1).unwrap(),
            GridSpec::cylinder(8, 9, 10, 0.2, [-0.5, -0.5]).unwrap(),
        ];
        for g in grids {
            let u = ComplexField::random(g, 0.3, &mut rng).unwrap();
            let back = decode_field(&encode_field(&u)).unwrap();
            assert!(bit_identical(&u, &back));
        }
    }

    #[test]
    fn typed_failures() {
        let g = GridSpec::rectangle(8, 8, 0.1, [0.0, 0.0]).unwrap();
        let u = ComplexField::constant(g, 0.2, Complex64::new(1.0, 0.0)).unwrap();
        let bytes = encode_field(&u);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_field(&bad), Err(Error::BadMagic(_))));
        let cut = &bytes[..100];
        let e = decode_field(cut).unwrap_err();
        assert_eq!(e.to_string(), "truncated payload at byte 100");
        let mut topo = bytes.clone();
        topo[4 + 4 + 8 + 16] = 2;
        assert!(matches!(decode_field(&topo), Err(Error::BadTopology { code: 2, dim: 2 })));
        let mut nan = bytes.clone();
        let at = 4 + 4 + 8 + 16 + 1;
        nan[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_field(&nan), Err(Error::NanInActive(0))));
    }

    #[test]
    fn legacy_payload_without_trailer_loads_centered() {
        let g = GridSpec::centered_square(1.0, 0.125).unwrap();
        let u = ComplexField::constant(g, 0.2, Complex64::new(0.0, 1.0)).unwrap();
        let bytes = encode_field(&u);
        let payload = &bytes[..bytes.len() - 4 - 6 * 8];
        assert!(bit_identical(&u, &decode_field(payload).unwrap()));
    }
}
