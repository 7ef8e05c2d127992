//! The `L2D1` tensor file format.
//!
//! Layout: magic `L2D1`, `u32` LE channels, `u32` LE frames, then
//! `channels × frames` `f32` LE values in row-major (channel-major) order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::tensor::Tensor2D;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"L2D1";

pub fn write_tensor<W: Write>(w: &mut W, tensor: &Tensor2D<f32>) -> std::io::Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(tensor.channels() as u32).to_le_bytes())?;
    w.write_all(&(tensor.frames() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(tensor.data().len() * 4);
    for v in tensor.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor2D<f32>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad tensor magic {magic:?}")));
    }
    let channels = read_u32(r)? as usize;
    let frames = read_u32(r)? as usize;
    let n = channels
        .checked_mul(frames)
        .ok_or_else(|| Error::Format("tensor size overflow".into()))?;
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated tensor body: {e}")))?;
    let data = buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor2D::new(channels, frames, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_tensor(path: impl AsRef<Path>, tensor: &Tensor2D<f32>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_tensor(&mut buf, tensor).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor2D<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = bytes.as_slice();
    let t = read_tensor(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(Error::Format(format!(
            "{}: {} trailing bytes",
            path.display(),
            cursor.len()
        )));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor2D::new(2, 1, vec![1.0f32, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"L2D1");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 20);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_tensor(&mut &b"L2D0\x01\0\0\0\x01\0\0\0\0\0\0\0"[..]).is_err());
        assert!(read_tensor(&mut &b"L2D1\x02\0\0\0\x01\0\0\0\0\0\0\0"[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(c in 1usize..6, f in 1usize..9, seed in any::<u32>()) {
            let data: Vec<f32> = (0..c * f).map(|i| ((i as u32 ^ seed) as f32).sin()).collect();
            let t = Tensor2D::new(c, f, data).unwrap();
            let mut buf = Vec::new();
            write_tensor(&mut buf, &t).unwrap();
            let back = read_tensor(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
