//! The `BLAB1` binary field format.
//!
//! | bytes | content |
//! |-------|---------|
//! | 5     | magic `BLAB1` |
//! | 8     | `n`, u64 little-endian |
//! | 8     | box length `L`, f64 little-endian |
//! | 1     | `0` real samples, `1` complex coefficients |
//! | ...   | `n` f64 values, or `n` interleaved `(re, im)` pairs |
//!
//! Real payloads are samples at `xⱼ = −L/2 + jL/n`. Complex payloads are
//! Fourier coefficients in ascending wavenumber order `k = −n/2+1, …, n/2`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{slot_of, RealField, SpatialGrid, SpectralField};

pub const MAGIC: &[u8; 5] = b"BLAB1";

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Real(RealField),
    Spectral(SpectralField),
}

impl Snapshot {
    pub fn grid(&self) -> &SpatialGrid {
        match self {
            Snapshot::Real(f) => f.grid(),
            Snapshot::Spectral(f) => f.grid(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let grid = self.grid();
        w.write_all(MAGIC)?;
        w.write_all(&(grid.n() as u64).to_le_bytes())?;
        w.write_all(&grid.box_length().to_le_bytes())?;
        match self {
            Snapshot::Real(f) => {
                w.write_all(&[0])?;
                for v in f.values() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Snapshot::Spectral(f) => {
                w.write_all(&[1])?;
                for c in ascending(f) {
                    w.write_all(&c.re.to_le_bytes())?;
                    w.write_all(&c.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a vector cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format("not a BLAB1 file".into()));
        }
        let n = u64::from_le_bytes(read_array(&mut r, "grid size")?) as usize;
        let l = f64::from_le_bytes(read_array(&mut r, "box length")?);
        let grid = SpatialGrid::new(n, l).map_err(|e| Error::Format(format!("bad header: {e}")))?;
        let [flag] = read_array::<1>(&mut r, "flag")?;
        let snap = match flag {
            0 => {
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    values.push(f64::from_le_bytes(read_array(&mut r, "payload")?));
                }
                Snapshot::Real(RealField::new(grid, values)?)
            }
            1 => {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
                let half = (n / 2) as i64;
                for k in (-half + 1)..=half {
                    let re = f64::from_le_bytes(read_array(&mut r, "payload")?);
                    let im = f64::from_le_bytes(read_array(&mut r, "payload")?);
                    coeffs[slot_of(k, n).expect("ascending range is representable")] = Complex64::new(re, im);
                }
                Snapshot::Spectral(SpectralField::new(grid, coeffs)?)
            }
            other => return Err(Error::Format(format!("unknown field flag {other}"))),
        };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(snap)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn ascending(f: &SpectralField) -> impl Iterator<Item = Complex64> + '_ {
    let half = (f.grid().n() / 2) as i64;
    ((-half + 1)..=half).map(move |k| f.at(k))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

fn read_array<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf, what)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward;

    fn field() -> RealField {
        SpatialGrid::new(16, 3.5).unwrap().sample(|x| x.sin() + 0.25)
    }

    #[test]
    fn header_layout() {
        let bytes = Snapshot::Real(field()).to_bytes();
        assert_eq!(&bytes[..5], b"BLAB1");
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(bytes[13..21].try_into().unwrap()), 3.5);
        assert_eq!(bytes[21], 0);
        assert_eq!(bytes.len(), 22 + 16 * 8);
    }

    #[test]
    fn real_round_trip() {
        let s = Snapshot::Real(field());
        assert_eq!(Snapshot::from_bytes(&s.to_bytes()).unwrap(), s);
    }

    #[test]
    fn spectral_round_trip() {
        let s = Snapshot::Spectral(forward(&field()));
        let bytes = s.to_bytes();
        assert_eq!(bytes[21], 1);
        assert_eq!(bytes.len(), 22 + 16 * 16);
        assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = Snapshot::Real(field()).to_bytes();
        assert!(matches!(Snapshot::from_bytes(&bytes[..30]), Err(Error::Format(_))));
        bytes.push(0);
        assert!(matches!(Snapshot::from_bytes(&bytes), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(Snapshot::from_bytes(&bytes), Err(Error::Format(_))));
    }
}
