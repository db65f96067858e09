//! Binary file formats.
//!
//! Spiked instance (`KIKT`): magic, version u32, n u32, p u32, lambda f64,
//! seed u64, prior tag u8, spike flag u8, then `C(n, p)` little-endian f64
//! entries in colex rank order, then (if flagged) the spike as `n` f64.
//!
//! Dense tensor (`KIKD`): magic, version u32, n u32, p u32, then `n^p`
//! little-endian f64 values in row-major order.

use crate::combinat::SubsetIndexer;
use crate::error::{Error, Result};
use crate::model::{dense_len, DenseTensor, SubsetTensor};
use std::io::{Read, Write};
use std::path::Path;

pub const INSTANCE_MAGIC: &[u8; 4] = b"KIKT";
pub const DENSE_MAGIC: &[u8; 4] = b"KIKD";
pub const FORMAT_VERSION: u32 = 1;

/// Contents of an instance file. The spike is optional: production runs omit
/// it, test fixtures carry it so correlation can be scored.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub seed: u64,
    pub prior_tag: u8,
    pub tensor: SubsetTensor,
    pub spike: Option<Vec<f64>>,
}

pub fn write_instance<W: Write>(
    w: &mut W,
    tensor: &SubsetTensor,
    lambda: f64,
    seed: u64,
    prior_tag: u8,
    spike: Option<&[f64]>,
) -> Result<()> {
    if let Some(s) = spike {
        if s.len() != tensor.n() {
            return Err(Error::parameter("spike length must equal n"));
        }
    }
    w.write_all(INSTANCE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(tensor.n() as u32).to_le_bytes())?;
    w.write_all(&(tensor.p() as u32).to_le_bytes())?;
    w.write_all(&lambda.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&[prior_tag, spike.is_some() as u8])?;
    for v in tensor.entries() {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(s) = spike {
        for v in s {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_instance<R: Read>(r: &mut R) -> Result<InstanceFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != INSTANCE_MAGIC {
        return Err(Error::Format("not an instance file (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(r)? as usize;
    let p = read_u32(r)? as usize;
    let lambda = read_f64(r)?;
    let seed = read_u64(r)?;
    let mut flags = [0u8; 2];
    r.read_exact(&mut flags)?;
    let [prior_tag, has_spike] = flags;

    let indexer = SubsetIndexer::new(n, p)?;
    let count = indexer.count() as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        entries.push(read_f64(r)?);
    }
    let tensor = SubsetTensor::new(n, p, entries)?;
    let spike = if has_spike != 0 {
        let mut s = Vec::with_capacity(n);
        for _ in 0..n {
            s.push(read_f64(r)?);
        }
        Some(s)
    } else {
        None
    };
    Ok(InstanceFile {
        n,
        p,
        lambda,
        seed,
        prior_tag,
        tensor,
        spike,
    })
}

pub fn write_instance_file(
    path: &Path,
    tensor: &SubsetTensor,
    lambda: f64,
    seed: u64,
    prior_tag: u8,
    spike: Option<&[f64]>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_instance(&mut f, tensor, lambda, seed, prior_tag, spike)?;
    f.flush()?;
    Ok(())
}

pub fn read_instance_file(path: &Path) -> Result<InstanceFile> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_instance(&mut f)
}

pub fn write_dense<W: Write>(w: &mut W, dense: &DenseTensor) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(dense.n() as u32).to_le_bytes())?;
    w.write_all(&(dense.p() as u32).to_le_bytes())?;
    for v in dense.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dense<R: Read>(r: &mut R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DENSE_MAGIC {
        return Err(Error::Format("not a dense tensor file (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(r)? as usize;
    let p = read_u32(r)? as usize;
    let len = dense_len(n, p)?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        values.push(read_f64(r)?);
    }
    DenseTensor::new(n, p, values)
}

pub fn write_dense_file(path: &Path, dense: &DenseTensor) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(&mut f, dense)?;
    f.flush()?;
    Ok(())
}

pub fn read_dense_file(path: &Path) -> Result<DenseTensor> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_dense(&mut f)
}
