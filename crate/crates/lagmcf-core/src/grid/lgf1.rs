//! LGF1: a minimal little-endian container for one scalar field.
//!
//! Layout: magic `LGF1`, u32 version (= 1), u32 ndim, then per axis
//! u64 npts + f64 spacing + f64 origin, then the raw f64 payload in
//! row-major order with the last axis fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LGF1";
const VERSION: u32 = 1;

/// Serialize a field into any writer.
pub fn write_field(w: &mut impl Write, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.ndim() as u32).to_le_bytes())?;
    for d in 0..g.ndim() {
        w.write_all(&(g.npts(d) as u64).to_le_bytes())?;
        w.write_all(&g.spacing(d).to_le_bytes())?;
        w.write_all(&g.origin(d).to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Deserialize a field from any reader, validating header and payload.
pub fn read_field(r: &mut impl Read) -> Result<ScalarField> {
    let magic = read_exact::<4>(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not an LGF1 file".into()));
    }
    let version = u32::from_le_bytes(read_exact::<4>(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(read_exact::<4>(r)?) as usize;
    if !(1..=super::MAX_DIM).contains(&ndim) {
        return Err(Error::Format(format!("bad ndim {ndim}")));
    }
    let mut npts = Vec::with_capacity(ndim);
    let mut spacing = Vec::with_capacity(ndim);
    let mut origin = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let n = u64::from_le_bytes(read_exact::<8>(r)?);
        npts.push(usize::try_from(n).map_err(|_| Error::Format("npts overflow".into()))?);
        spacing.push(f64::from_le_bytes(read_exact::<8>(r)?));
        origin.push(f64::from_le_bytes(read_exact::<8>(r)?));
    }
    let grid = GridSpec::new(&npts, &spacing, &origin)?;
    let mut values = vec![0.0f64; grid.len()];
    for v in &mut values {
        *v = f64::from_le_bytes(read_exact::<8>(r)?);
    }
    // Trailing garbage means the file is not what it claims to be.
    let mut tail = [0u8; 1];
    match r.read(&mut tail)? {
        0 => {}
        _ => return Err(Error::Format("trailing bytes after payload".into())),
    }
    ScalarField::from_values(&grid, values)
}

/// Write a field to a file path.
pub fn write_field_path(path: impl AsRef<Path>, f: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f)?;
    w.flush()?;
    Ok(())
}

/// Read a field from a file path.
pub fn read_field_path(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    read_field(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let g = GridSpec::new(&[8, 12], &[0.125, 0.5], &[-1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let f = ScalarField::from_values(&g, vals).unwrap();

        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let g = GridSpec::standard_torus(1, 8).unwrap();
        let f = ScalarField::zeros(&g);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_field(&mut bad.as_slice()),
            Err(Error::Format(_))
        ));

        let mut badv = buf.clone();
        badv[4] = 9;
        assert!(matches!(
            read_field(&mut badv.as_slice()),
            Err(Error::Format(_))
        ));

        let mut truncated = buf.clone();
        truncated.truncate(buf.len() - 3);
        assert!(read_field(&mut truncated.as_slice()).is_err());

        buf.push(0);
        assert!(matches!(
            read_field(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.lgf");
        let g = GridSpec::standard_torus(2, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].cos() + 0.5 * x[1].sin()).unwrap();
        write_field_path(&path, &f).unwrap();
        let back = read_field_path(&path).unwrap();
        assert_eq!(back, f);
    }
}
