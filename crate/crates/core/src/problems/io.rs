//! Binary instance files.
//!
//! Little-endian layout: magic `CFPB`, u32 version, u32 `n p m l n_soc`, the
//! SOC dimensions, then `Q`, `A`, `G` each as (u32 nnz, column offsets, row
//! indices, f64 values), then `q`, `b`, `h` as f64 arrays, then a CRC32 of
//! everything before it.

use std::path::Path;

use crate::cones::ConeSpec;
use crate::custom::{verify_crc, Reader};
use crate::error::{Error, Result};
use crate::ipm::ProblemData;
use crate::sparse::SparseCcs;

const MAGIC: &[u8; 4] = b"CFPB";
pub const INSTANCE_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("instance sizes fit in u32").to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
}

fn put_matrix(out: &mut Vec<u8>, m: &SparseCcs) {
    put_u32(out, m.nnz());
    m.col_offsets().iter().for_each(|&v| put_u32(out, v));
    m.row_indices().iter().for_each(|&v| put_u32(out, v));
    put_f64s(out, m.values());
}

pub fn encode_instance(p: &ProblemData) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&INSTANCE_VERSION.to_le_bytes());
    for v in [p.n(), p.p(), p.m(), p.cone().nn_count(), p.cone().soc_count()] {
        put_u32(&mut out, v);
    }
    p.cone().soc_dims().iter().for_each(|&d| put_u32(&mut out, d));
    put_matrix(&mut out, p.quad());
    put_matrix(&mut out, p.a());
    put_matrix(&mut out, p.g());
    put_f64s(&mut out, p.q());
    put_f64s(&mut out, p.b());
    put_f64s(&mut out, p.h());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn read_f64s(r: &mut Reader, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| r.f64()).collect()
}

fn read_matrix(r: &mut Reader, nrows: usize, ncols: usize) -> Result<SparseCcs> {
    let nnz = r.usize()?;
    let offs = r.array(ncols + 1)?;
    let rows = r.array(nnz)?;
    let vals = read_f64s(r, nnz)?;
    SparseCcs::new(nrows, ncols, offs, rows, vals).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn decode_instance(bytes: &[u8]) -> Result<ProblemData> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Malformed("missing instance magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != INSTANCE_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: INSTANCE_VERSION });
    }
    let body = verify_crc(bytes)?;
    let mut r = Reader::new(&body[8..]);
    let (n, p, m, l, n_soc) = (r.usize()?, r.usize()?, r.usize()?, r.usize()?, r.usize()?);
    let dims = r.array(n_soc)?;
    let cone = ConeSpec::new(l, dims).map_err(|e| Error::Malformed(e.to_string()))?;
    if cone.dim() != m {
        return Err(Error::Malformed("cone dimension disagrees with m".into()));
    }
    let quad = read_matrix(&mut r, n, n)?;
    let a = read_matrix(&mut r, p, n)?;
    let g = read_matrix(&mut r, m, n)?;
    let q = read_f64s(&mut r, n)?;
    let b = read_f64s(&mut r, p)?;
    let h = read_f64s(&mut r, m)?;
    if !r.finished() {
        return Err(Error::Malformed("trailing bytes after instance body".into()));
    }
    ProblemData::new(quad, q, a, b, g, h, cone)
}

pub fn write_instance(path: impl AsRef<Path>, problem: &ProblemData) -> Result<()> {
    std::fs::write(path, encode_instance(problem))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemData> {
    decode_instance(&std::fs::read(path)?)
}
