//! Per-path binary dump for replay and debugging.
//!
//! Layout (little-endian): magic "MRLB1", u32 d, u64 n_steps, u64 seed,
//! u64 path_index, then (n_steps + 1) * d f64 values.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::path_sim::SamplePath;

const MAGIC: &[u8; 5] = b"MRLB1";

pub fn write_path_dump(
    path: &SamplePath,
    seed: u64,
    path_index: u64,
    w: &mut impl Write,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(path.d as u32).to_le_bytes())?;
    w.write_all(&(path.n_steps() as u64).to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&path_index.to_le_bytes())?;
    for v in &path.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path_dump(r: &mut impl Read) -> Result<(SamplePath, u64, u64)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::validation("bad magic in path dump"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let path_index = u64::from_le_bytes(b8);
    if d == 0 || n == 0 {
        return Err(Error::validation("degenerate dump header"));
    }
    let mut values = vec![0.0; (n + 1) * d];
    for v in values.iter_mut() {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok((SamplePath::new(d, 1.0 / n as f64, values), seed, path_index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let path = SamplePath::new(2, 0.25, vec![0.0, 1.0, 0.5, -0.5, 1.5, 2.5, 0.25, 0.75, 3.0, 4.0]);
        let mut buf = Vec::new();
        write_path_dump(&path, 42, 7, &mut buf).unwrap();
        let (back, seed, idx) = read_path_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(seed, 42);
        assert_eq!(idx, 7);
        assert_eq!(back.d, 2);
        assert_eq!(back.values, path.values);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = b"NOPE!".to_vec();
        buf.extend_from_slice(&[0u8; 64]);
        assert!(read_path_dump(&mut buf.as_slice()).is_err());
    }
}
