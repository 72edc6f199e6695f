//! CSTD binary dump format (version 1) and sample-set directories.
//!
//! File layout, all little-endian:
//!
//! ```text
//! bytes 0..4   magic ASCII "CSTD"
//! bytes 4..8   format version, u32 = 1
//! byte  8      dtype code (1 = float32, 2 = float64)
//! byte  9      rank, u8
//! then         rank × u64 dimension sizes
//! then         payload, row-major scalars
//! ```
//!
//! A [`SampleSet`] is stored as a directory containing `manifest.json` plus
//! one stacked CSTD tensor per role (`images`, `contents`, `styles`) and a
//! `factors.csv` with one generating-factor row per sample. Round-trips are
//! bit-exact on the data buffers.

use crate::error::{Error, Result};
use crate::tensor::{Buffer, Dtype, SampleSet, Tensor, Vector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 4] = *b"CSTD";
pub const FORMAT_VERSION: u32 = 1;

const IO_CHUNK: usize = 1 << 20; // scalars per conversion chunk

/// Either payload kind a dump path can hold.
#[derive(Debug)]
pub enum DumpItem {
    Tensor(Tensor),
    SampleSet(SampleSet),
}

/// Write a tensor to `path` in CSTD format.
pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[t.dtype().code(), t.rank() as u8])?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    match t.buffer() {
        Buffer::F32(v) => write_scalars(&mut w, v, |x, out| out.extend_from_slice(&x.to_le_bytes()))?,
        Buffer::F64(v) => write_scalars(&mut w, v, |x, out| out.extend_from_slice(&x.to_le_bytes()))?,
    }
    w.flush()?;
    Ok(())
}

fn write_scalars<T: Copy>(
    w: &mut impl Write,
    vals: &[T],
    put: impl Fn(T, &mut Vec<u8>),
) -> Result<()> {
    let mut buf = Vec::with_capacity(IO_CHUNK * std::mem::size_of::<T>());
    for chunk in vals.chunks(IO_CHUNK) {
        buf.clear();
        for &x in chunk {
            put(x, &mut buf);
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Read a CSTD tensor, validating the header and payload.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let file_len = std::fs::metadata(path)?.len();
    let mut r = BufReader::new(File::open(path)?);

    let mut head = [0u8; 10];
    read_exact_at(&mut r, &mut head, 0, file_len, "header")?;
    if head[0..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"CSTD\""));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::format(
            4,
            format!("unsupported format version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let dtype = Dtype::from_code(head[8])
        .ok_or_else(|| Error::format(8, format!("unknown dtype code {}", head[8])))?;
    let rank = head[9] as usize;
    if rank == 0 {
        return Err(Error::format(9, "rank must be at least 1"));
    }

    let mut shape = Vec::with_capacity(rank);
    for i in 0..rank {
        let mut dim = [0u8; 8];
        read_exact_at(&mut r, &mut dim, 10 + 8 * i as u64, file_len, "dimension")?;
        let d = u64::from_le_bytes(dim);
        if d == 0 {
            return Err(Error::format(
                10 + 8 * i as u64,
                format!("dimension {i} is zero"),
            ));
        }
        shape.push(d as usize);
    }
    let header_len = 10 + 8 * rank as u64;
    let numel = shape
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .ok_or_else(|| Error::format(10, "dimension product overflows"))?;
    let payload_len = numel
        .checked_mul(dtype.size_bytes() as u64)
        .ok_or_else(|| Error::format(10, "payload size overflows"))?;
    if file_len < header_len + payload_len {
        return Err(Error::format(
            file_len,
            format!(
                "truncated payload: expected {} bytes after header, found {}",
                payload_len,
                file_len - header_len.min(file_len)
            ),
        ));
    }
    if file_len > header_len + payload_len {
        return Err(Error::format(
            header_len + payload_len,
            format!("trailing data: file is {} bytes too long", file_len - header_len - payload_len),
        ));
    }

    let buffer = match dtype {
        Dtype::F32 => Buffer::F32(read_scalars::<f32, 4>(
            &mut r,
            numel as usize,
            header_len,
            f32::from_le_bytes,
            f32::is_finite,
        )?),
        Dtype::F64 => Buffer::F64(read_scalars::<f64, 8>(
            &mut r,
            numel as usize,
            header_len,
            f64::from_le_bytes,
            f64::is_finite,
        )?),
    };
    // Construction re-checks shape/size coherence; finiteness was validated
    // element-wise above with exact byte offsets.
    Tensor::new(shape, buffer)
}

fn read_exact_at(
    r: &mut impl Read,
    buf: &mut [u8],
    offset: u64,
    file_len: u64,
    what: &str,
) -> Result<()> {
    if file_len < offset + buf.len() as u64 {
        return Err(Error::format(
            file_len,
            format!("truncated {what}: file ends at byte {file_len}"),
        ));
    }
    r.read_exact(buf)?;
    Ok(())
}

fn read_scalars<T: Copy, const W: usize>(
    r: &mut impl Read,
    numel: usize,
    payload_start: u64,
    decode: impl Fn([u8; W]) -> T,
    finite: impl Fn(T) -> bool,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(numel);
    let mut buf = vec![0u8; IO_CHUNK.min(numel.max(1)) * W];
    while out.len() < numel {
        let base = out.len();
        let take = (numel - base).min(IO_CHUNK);
        let bytes = &mut buf[..take * W];
        r.read_exact(bytes)?;
        for (j, raw) in bytes.chunks_exact(W).enumerate() {
            let v = decode(raw.try_into().unwrap());
            if !finite(v) {
                let idx = base + j;
                return Err(Error::format(
                    payload_start + (idx * W) as u64,
                    format!("non-finite value at element {idx}"),
                ));
            }
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    n: usize,
    members: BTreeMap<String, Member>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Member {
    file: String,
    sha256: String,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex_string(&hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex_string(&Sha256::digest(bytes))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Stack per-sample tensors into one rank-(r+1) tensor for storage.
fn stack_for_storage(items: &[Tensor]) -> Result<Tensor> {
    let shape0 = items[0].shape().to_vec();
    let dtype = items[0].dtype();
    let mut shape = Vec::with_capacity(shape0.len() + 1);
    shape.push(items.len());
    shape.extend_from_slice(&shape0);
    match dtype {
        Dtype::F32 => {
            let mut data = Vec::with_capacity(items.len() * items[0].numel());
            for t in items {
                let v = t.buffer().as_f32().ok_or_else(|| {
                    Error::shape("all samples in a role must share one dtype")
                })?;
                data.extend_from_slice(v);
            }
            Tensor::from_f32(shape, data)
        }
        Dtype::F64 => {
            let mut data = Vec::with_capacity(items.len() * items[0].numel());
            for t in items {
                let v = t.buffer().as_f64().ok_or_else(|| {
                    Error::shape("all samples in a role must share one dtype")
                })?;
                data.extend_from_slice(v);
            }
            Tensor::from_f64(shape, data)
        }
    }
}

/// Split a stacked rank-(r+1) tensor back into per-sample tensors.
fn split_stacked(t: &Tensor) -> Result<Vec<Tensor>> {
    if t.rank() < 2 {
        return Err(Error::shape("stacked role tensor must have rank >= 2"));
    }
    let n = t.shape()[0];
    let per_shape = t.shape()[1..].to_vec();
    let per_len = t.numel() / n;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let buf = match t.buffer() {
            Buffer::F32(v) => Buffer::F32(v[i * per_len..(i + 1) * per_len].to_vec()),
            Buffer::F64(v) => Buffer::F64(v[i * per_len..(i + 1) * per_len].to_vec()),
        };
        out.push(Tensor::new(per_shape.clone(), buf)?);
    }
    Ok(out)
}

pub const FACTOR_NAMES: [&str; 5] = ["azimuth", "elevation", "red", "green", "blue"];

fn write_factors_csv(path: &Path, factors: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    if factors.ncols() == FACTOR_NAMES.len() {
        w.write_record(FACTOR_NAMES).map_err(csv_err)?;
    } else {
        let names: Vec<String> = (0..factors.ncols()).map(|i| format!("f{i}")).collect();
        w.write_record(&names).map_err(csv_err)?;
    }
    for row in factors.rows() {
        let rec: Vec<String> = row.iter().map(|v| format!("{v:.17}")).collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_factors_csv(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let ncols = r.headers().map_err(csv_err)?.len();
    let mut data = Vec::new();
    let mut nrows = 0usize;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != ncols {
            return Err(Error::format(
                0,
                format!("factors row {nrows} has {} fields, expected {ncols}", rec.len()),
            ));
        }
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(0, format!("bad factor value {field:?}")))?;
            data.push(v);
        }
        nrows += 1;
    }
    Array2::from_shape_vec((nrows, ncols), data)
        .map_err(|e| Error::format(0, format!("factors shape: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(0, format!("csv: {e}"))
}

/// Write a sample set as a directory of CSTD members plus `manifest.json`.
pub fn write_sample_set(dir: impl AsRef<Path>, set: &SampleSet) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut members = BTreeMap::new();

    let mut put = |role: &str, file: String, path: PathBuf| -> Result<()> {
        members.insert(
            role.to_string(),
            Member {
                file,
                sha256: sha256_file(&path)?,
            },
        );
        Ok(())
    };

    if let Some(images) = set.images() {
        let path = dir.join("images.cstd");
        write_tensor(&path, &stack_for_storage(images)?)?;
        put("images", "images.cstd".into(), path)?;
    }
    if let Some(contents) = set.contents() {
        let path = dir.join("contents.cstd");
        write_tensor(&path, &stack_for_storage(contents)?)?;
        put("contents", "contents.cstd".into(), path)?;
    }
    if let Some(styles) = set.styles() {
        let stacked = stack_vectors_for_storage(styles)?;
        let path = dir.join("styles.cstd");
        write_tensor(&path, &stacked)?;
        put("styles", "styles.cstd".into(), path)?;
    }
    if let Some(factors) = set.factors() {
        let path = dir.join("factors.csv");
        write_factors_csv(&path, factors)?;
        put("factors", "factors.csv".into(), path)?;
    }

    let manifest = Manifest {
        format: "csdis-sampleset".into(),
        version: FORMAT_VERSION,
        n: set.len(),
        members,
    };
    let mut f = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn stack_vectors_for_storage(styles: &[Vector]) -> Result<Tensor> {
    let len = styles[0].len();
    match styles[0].dtype() {
        Dtype::F32 => {
            let mut data = Vec::with_capacity(styles.len() * len);
            for v in styles {
                data.extend_from_slice(
                    v.buffer()
                        .as_f32()
                        .ok_or_else(|| Error::shape("styles must share one dtype"))?,
                );
            }
            Tensor::from_f32(vec![styles.len(), len], data)
        }
        Dtype::F64 => {
            let mut data = Vec::with_capacity(styles.len() * len);
            for v in styles {
                data.extend_from_slice(
                    v.buffer()
                        .as_f64()
                        .ok_or_else(|| Error::shape("styles must share one dtype"))?,
                );
            }
            Tensor::from_f64(vec![styles.len(), len], data)
        }
    }
}

/// Read a sample-set directory, verifying member digests against the manifest.
pub fn read_sample_set(dir: impl AsRef<Path>) -> Result<SampleSet> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_reader(BufReader::new(
        File::open(&manifest_path).map_err(|e| {
            Error::config(format!("missing manifest {}: {e}", manifest_path.display()))
        })?,
    ))?;
    if manifest.format != "csdis-sampleset" {
        return Err(Error::format(
            0,
            format!("manifest format {:?} is not csdis-sampleset", manifest.format),
        ));
    }

    let mut images = None;
    let mut contents = None;
    let mut styles = None;
    let mut factors = None;
    for (role, member) in &manifest.members {
        let path = dir.join(&member.file);
        let digest = sha256_file(&path)?;
        if digest != member.sha256 {
            return Err(Error::format(
                0,
                format!("digest mismatch for {}: manifest declares {}", member.file, member.sha256),
            ));
        }
        match role.as_str() {
            "images" => images = Some(split_stacked(&read_tensor(&path)?)?),
            "contents" => contents = Some(split_stacked(&read_tensor(&path)?)?),
            "styles" => {
                let t = read_tensor(&path)?;
                if t.rank() != 2 {
                    return Err(Error::shape("styles member must be a rank-2 tensor"));
                }
                styles = Some(
                    split_stacked(&t)?
                        .into_iter()
                        .map(|row| Vector::new(row.into_buffer()))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            "factors" => factors = Some(read_factors_csv(&path)?),
            other => {
                return Err(Error::format(0, format!("unknown manifest role {other:?}")));
            }
        }
    }
    let set = SampleSet::new(images, contents, styles, factors)?;
    if set.len() != manifest.n {
        return Err(Error::format(
            0,
            format!("manifest declares n={}, members hold {}", manifest.n, set.len()),
        ));
    }
    Ok(set)
}

/// Digest of the manifest file identifying a dataset directory.
pub fn sample_set_digest(dir: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(dir.as_ref().join("manifest.json"))?;
    Ok(sha256_bytes(&bytes))
}

/// Write either payload kind. Tensors become files, sample sets directories.
pub fn write_dump(path: impl AsRef<Path>, item: &DumpItem) -> Result<()> {
    match item {
        DumpItem::Tensor(t) => write_tensor(path, t),
        DumpItem::SampleSet(s) => write_sample_set(path, s),
    }
}

/// Read back whatever `write_dump` produced at `path`.
pub fn read_dump(path: impl AsRef<Path>) -> Result<DumpItem> {
    let path = path.as_ref();
    if path.is_dir() {
        Ok(DumpItem::SampleSet(read_sample_set(path)?))
    } else {
        Ok(DumpItem::Tensor(read_tensor(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn tensor_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f64(vec![2, 2], vec![1.5, -2.25, 3.5e-10, 4.0]).unwrap();
        write_tensor(&path, &t).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back, t);
        write_tensor(&path, &back).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f32(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        write_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0..4].copy_from_slice(b"XXXX");
        std::fs::write(&path, &bytes).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_version_and_dtype_offsets() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f32(vec![2], vec![1.0, 2.0]).unwrap();
        write_tensor(&path, &t).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bytes = good.clone();
        bytes[4] = 9;
        std::fs::write(&path, &bytes).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected format error, got {other:?}"),
        }

        let mut bytes = good;
        bytes[8] = 77;
        std::fs::write(&path, &bytes).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f32(vec![100], vec![0.5; 100]).unwrap();
        write_tensor(&path, &t).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // drop the last scalar (4 bytes): 99 of 100 declared floats remain
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, msg }) => {
                assert_eq!(offset, bytes.len() as u64 - 4);
                assert!(msg.contains("truncated"), "{msg}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f32(vec![2], vec![1.0, 2.0]).unwrap();
        write_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let expected_end = bytes.len() as u64;
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, expected_end),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_payload_offset() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cstd");
        let t = Tensor::from_f32(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        write_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let payload_start = 10 + 8;
        bytes[payload_start + 8..payload_start + 12]
            .copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match read_tensor(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, (payload_start + 8) as u64),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn sample_set_round_trip() {
        let dir = tempdir().unwrap();
        let images: Vec<Tensor> = (0..3)
            .map(|i| Tensor::from_f32(vec![3, 2, 2], vec![i as f32 * 0.25 - 0.5; 12]).unwrap())
            .collect();
        let styles: Vec<Vector> = (0..3)
            .map(|i| Vector::from_f32(vec![0.1 * i as f32, 0.5, 0.9]).unwrap())
            .collect();
        let factors =
            Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f64 / 15.0);
        let set = SampleSet::new(Some(images.clone()), None, Some(styles.clone()), Some(factors.clone())).unwrap();
        let path = dir.path().join("set");
        write_sample_set(&path, &set).unwrap();
        let back = read_sample_set(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.images().unwrap(), &images[..]);
        assert_eq!(back.styles().unwrap(), &styles[..]);
        let f = back.factors().unwrap();
        assert_eq!(f, &factors);
        assert!(back.contents().is_none());
    }

    #[test]
    fn sample_set_digest_mismatch_detected() {
        let dir = tempdir().unwrap();
        let images: Vec<Tensor> = (0..2)
            .map(|_| Tensor::from_f32(vec![1, 2, 2], vec![0.0; 4]).unwrap())
            .collect();
        let set = SampleSet::new(Some(images), None, None, None).unwrap();
        let path = dir.path().join("set");
        write_sample_set(&path, &set).unwrap();
        // corrupt one payload byte
        let member = path.join("images.cstd");
        let mut bytes = std::fs::read(&member).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        std::fs::write(&member, &bytes).unwrap();
        assert!(matches!(
            read_sample_set(&path),
            Err(Error::Format { .. })
        ));
    }
}
