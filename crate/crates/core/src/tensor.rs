//! Dense tensor storage and the flattening convention used by the metrics.
//!
//! Samples are either rank-1 vectors (styles) or rank-3 `[C, H, W]` tensors
//! (images, contents). Flattening a rank-3 sample concatenates the channels
//! and then row-scans each channel, i.e. `index(c, h, w) = c*H*W + h*W + w`,
//! which is exactly the row-major layout of the stored buffer.

use crate::error::{Error, Result};
use ndarray::Array2;

/// Element type of a stored tensor. All metric arithmetic runs in f64
/// regardless of the storage dtype.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size_bytes(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// Row-major scalar buffer in either precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Buffer {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Buffer {
    pub fn len(&self) -> usize {
        match self {
            Buffer::F32(v) => v.len(),
            Buffer::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Buffer::F32(_) => Dtype::F32,
            Buffer::F64(_) => Dtype::F64,
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Buffer::F32(v) => v[i] as f64,
            Buffer::F64(v) => v[i],
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Buffer::F32(v) => v.iter().all(|x| x.is_finite()),
            Buffer::F64(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    /// Copy the buffer into `out` as f64.
    pub fn copy_into_f64(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.len());
        match self {
            Buffer::F32(v) => {
                for (o, &x) in out.iter_mut().zip(v.iter()) {
                    *o = x as f64;
                }
            }
            Buffer::F64(v) => out.copy_from_slice(v),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.copy_into_f64(&mut out);
        out
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match self {
            Buffer::F32(v) => Some(v),
            Buffer::F64(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            Buffer::F64(v) => Some(v),
            Buffer::F32(_) => None,
        }
    }
}

/// Dense n-dimensional array with shape metadata.
///
/// Invariants: `product(shape) == data.len()`, every dimension ≥ 1, and all
/// entries finite. Construction rejects anything else.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Buffer,
}

fn checked_numel(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::shape("tensor rank must be at least 1"));
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::shape(format!(
            "all dimension sizes must be >= 1, got {shape:?}"
        )));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::shape(format!("shape {shape:?} overflows element count")))
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Buffer) -> Result<Self> {
        let numel = checked_numel(&shape)?;
        if numel != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} implies {numel} elements but buffer holds {}",
                data.len()
            )));
        }
        if !data.all_finite() {
            return Err(Error::input("tensor contains NaN or Inf entries"));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f32(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Tensor::new(shape, Buffer::F32(data))
    }

    pub fn from_f64(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Tensor::new(shape, Buffer::F64(data))
    }

    /// Constant-one tensor, f32 storage.
    pub fn ones(shape: Vec<usize>) -> Result<Self> {
        let numel = checked_numel(&shape)?;
        Tensor::new(shape, Buffer::F32(vec![1.0; numel]))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn buffer(&self) -> &Buffer {
        &self.data
    }

    pub fn into_buffer(self) -> Buffer {
        self.data
    }
}

/// A 1-D sample (style vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Buffer,
}

impl Vector {
    pub fn new(data: Buffer) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::shape("vector length must be >= 1"));
        }
        if !data.all_finite() {
            return Err(Error::input("vector contains NaN or Inf entries"));
        }
        Ok(Vector { data })
    }

    pub fn from_f32(data: Vec<f32>) -> Result<Self> {
        Vector::new(Buffer::F32(data))
    }

    pub fn from_f64(data: Vec<f64>) -> Result<Self> {
        Vector::new(Buffer::F64(data))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn buffer(&self) -> &Buffer {
        &self.data
    }
}

/// Concatenate channels, then row-scan: `[C, H, W] -> C*H*W` with
/// `index(c, h, w) = c*H*W + h*W + w`. Rank-1 input is passed through.
///
/// Only rank-1 and rank-3 sample layouts are defined; anything else is a
/// shape error (grayscale images must be stored as `[1, H, W]`).
pub fn flatten_sample(t: &Tensor) -> Result<Vector> {
    match t.rank() {
        1 | 3 => Vector::new(t.data.clone()),
        r => Err(Error::shape(format!(
            "flatten_sample expects rank 1 or 3, got rank {r} (shape {:?})",
            t.shape
        ))),
    }
}

/// Anything that can serve as one row of a stacked sample matrix.
pub trait SampleItem {
    fn item_shape(&self) -> Vec<usize>;
    fn flat_len(&self) -> usize;
    /// Write the flattened sample into `out` as f64.
    fn copy_flat_f64(&self, out: &mut [f64]) -> Result<()>;
}

impl SampleItem for Tensor {
    fn item_shape(&self) -> Vec<usize> {
        self.shape.clone()
    }

    fn flat_len(&self) -> usize {
        self.numel()
    }

    fn copy_flat_f64(&self, out: &mut [f64]) -> Result<()> {
        match self.rank() {
            1 | 3 => {
                self.data.copy_into_f64(out);
                Ok(())
            }
            r => Err(Error::shape(format!(
                "sample layout must be rank 1 or 3, got rank {r}"
            ))),
        }
    }
}

impl SampleItem for Vector {
    fn item_shape(&self) -> Vec<usize> {
        vec![self.len()]
    }

    fn flat_len(&self) -> usize {
        self.len()
    }

    fn copy_flat_f64(&self, out: &mut [f64]) -> Result<()> {
        self.data.copy_into_f64(out);
        Ok(())
    }
}

/// Stack N samples into an N×D row matrix, flattening each sample.
pub fn stack_samples<S: SampleItem>(items: &[S]) -> Result<Array2<f64>> {
    if items.len() < 2 {
        return Err(Error::shape(format!(
            "stacking requires at least 2 samples, got {}",
            items.len()
        )));
    }
    let d = items[0].flat_len();
    let shape0 = items[0].item_shape();
    let mut out = Array2::<f64>::zeros((items.len(), d));
    for (i, item) in items.iter().enumerate() {
        if item.item_shape() != shape0 {
            return Err(Error::shape(format!(
                "sample {i} has shape {:?}, expected {:?}",
                item.item_shape(),
                shape0
            )));
        }
        let row = out.row_mut(i).into_slice().expect("row is contiguous");
        item.copy_flat_f64(row)?;
    }
    Ok(out)
}

/// Ordered collection of N aligned samples; the unit every metric consumes.
#[derive(Clone, Debug, Default)]
pub struct SampleSet {
    n: usize,
    images: Option<Vec<Tensor>>,
    contents: Option<Vec<Tensor>>,
    styles: Option<Vec<Vector>>,
    factors: Option<Array2<f64>>,
}

fn check_uniform_tensors(role: &str, items: &[Tensor]) -> Result<()> {
    let shape0 = items[0].shape();
    for (i, t) in items.iter().enumerate() {
        if t.shape() != shape0 {
            return Err(Error::shape(format!(
                "{role}[{i}] has shape {:?}, expected {:?}",
                t.shape(),
                shape0
            )));
        }
    }
    Ok(())
}

impl SampleSet {
    pub fn new(
        images: Option<Vec<Tensor>>,
        contents: Option<Vec<Tensor>>,
        styles: Option<Vec<Vector>>,
        factors: Option<Array2<f64>>,
    ) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut check_n = |role: &str, len: usize| -> Result<()> {
            match n {
                None => {
                    n = Some(len);
                    Ok(())
                }
                Some(prev) if prev == len => Ok(()),
                Some(prev) => Err(Error::shape(format!(
                    "{role} holds {len} samples but other roles hold {prev}"
                ))),
            }
        };
        if let Some(items) = &images {
            check_n("images", items.len())?;
            check_uniform_tensors("images", items)?;
        }
        if let Some(items) = &contents {
            check_n("contents", items.len())?;
            check_uniform_tensors("contents", items)?;
        }
        if let Some(items) = &styles {
            check_n("styles", items.len())?;
            let len0 = items[0].len();
            for (i, v) in items.iter().enumerate() {
                if v.len() != len0 {
                    return Err(Error::shape(format!(
                        "styles[{i}] has length {}, expected {len0}",
                        v.len()
                    )));
                }
            }
        }
        if let Some(f) = &factors {
            check_n("factors", f.nrows())?;
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::input("factors contain NaN or Inf entries"));
            }
        }
        let n = n.ok_or_else(|| Error::shape("sample set has no populated roles"))?;
        if n < 2 {
            return Err(Error::shape(format!(
                "sample set needs at least 2 samples, got {n}"
            )));
        }
        Ok(SampleSet {
            n,
            images,
            contents,
            styles,
            factors,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 2 by construction
    }

    pub fn images(&self) -> Option<&[Tensor]> {
        self.images.as_deref()
    }

    pub fn contents(&self) -> Option<&[Tensor]> {
        self.contents.as_deref()
    }

    pub fn styles(&self) -> Option<&[Vector]> {
        self.styles.as_deref()
    }

    pub fn factors(&self) -> Option<&Array2<f64>> {
        self.factors.as_ref()
    }

    pub fn with_contents(mut self, contents: Vec<Tensor>) -> Result<Self> {
        self.contents = Some(contents);
        SampleSet::new(self.images, self.contents, self.styles, self.factors)
    }

    pub fn with_styles(mut self, styles: Vec<Vector>) -> Result<Self> {
        self.styles = Some(styles);
        SampleSet::new(self.images, self.contents, self.styles, self.factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_single_element() {
        let t = Tensor::from_f64(vec![1, 1, 1], vec![7.0]).unwrap();
        let v = flatten_sample(&t).unwrap();
        assert_eq!(v.buffer().to_f64_vec(), vec![7.0]);
    }

    #[test]
    fn flatten_channel_major_then_row_scan() {
        // channel 0 = [[a,b],[c,d]], channel 1 = [[e,f],[g,h]]
        let data: Vec<f64> = (1..=8).map(|x| x as f64).collect();
        let t = Tensor::from_f64(vec![2, 2, 2], data.clone()).unwrap();
        let v = flatten_sample(&t).unwrap();
        assert_eq!(v.buffer().to_f64_vec(), data);
        // index formula: c*H*W + h*W + w
        let get = |c: usize, h: usize, w: usize| v.buffer().get_f64(c * 4 + h * 2 + w);
        assert_eq!(get(0, 0, 1), 2.0);
        assert_eq!(get(1, 1, 0), 7.0);
    }

    #[test]
    fn flatten_rejects_rank_2_and_4() {
        let t2 = Tensor::from_f64(vec![2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(flatten_sample(&t2), Err(Error::Shape(_))));
        let t4 = Tensor::from_f64(vec![1, 1, 2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(flatten_sample(&t4), Err(Error::Shape(_))));
    }

    #[test]
    fn flatten_is_a_bijection() {
        // Scatter a permutation through the index formula and recover it.
        let (c, h, w) = (3, 4, 5);
        let mut data = vec![0.0f64; c * h * w];
        for ci in 0..c {
            for hi in 0..h {
                for wi in 0..w {
                    data[ci * h * w + hi * w + wi] = (ci * 100 + hi * 10 + wi) as f64;
                }
            }
        }
        let t = Tensor::from_f64(vec![c, h, w], data).unwrap();
        let v = flatten_sample(&t).unwrap();
        let mut seen = vec![false; c * h * w];
        for ci in 0..c {
            for hi in 0..h {
                for wi in 0..w {
                    let idx = ci * h * w + hi * w + wi;
                    assert!(!seen[idx]);
                    seen[idx] = true;
                    assert_eq!(v.buffer().get_f64(idx), (ci * 100 + hi * 10 + wi) as f64);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stack_two_vectors() {
        let a = Vector::from_f64(vec![1.0, 2.0]).unwrap();
        let b = Vector::from_f64(vec![3.0, 4.0]).unwrap();
        let m = stack_samples(&[a, b]).unwrap();
        assert_eq!(m.shape(), &[2, 2]);
        assert_eq!(m[[0, 0]], 1.0);
        assert_eq!(m[[1, 1]], 4.0);
    }

    #[test]
    fn stack_tensors_flattened_width() {
        let items: Vec<Tensor> = (0..5)
            .map(|i| Tensor::from_f32(vec![3, 8, 8], vec![i as f32; 192]).unwrap())
            .collect();
        let m = stack_samples(&items).unwrap();
        assert_eq!(m.shape(), &[5, 192]);
    }

    #[test]
    fn stack_rejects_empty_and_heterogeneous() {
        let empty: Vec<Vector> = vec![];
        assert!(matches!(stack_samples(&empty), Err(Error::Shape(_))));
        let a = Vector::from_f64(vec![1.0, 2.0]).unwrap();
        let b = Vector::from_f64(vec![3.0]).unwrap();
        assert!(matches!(stack_samples(&[a, b]), Err(Error::Shape(_))));
    }

    #[test]
    fn stack_preserves_row_norms() {
        let items: Vec<Tensor> = (0..4)
            .map(|i| {
                let data: Vec<f64> = (0..24).map(|j| ((i * 31 + j * 7) % 11) as f64 - 5.0).collect();
                Tensor::from_f64(vec![2, 3, 4], data).unwrap()
            })
            .collect();
        let m = stack_samples(&items).unwrap();
        for (i, item) in items.iter().enumerate() {
            let norm_item: f64 = item
                .buffer()
                .to_f64_vec()
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let norm_row: f64 = m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm_item - norm_row).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_construction_rejects_bad_inputs() {
        assert!(matches!(
            Tensor::from_f64(vec![2, 2], vec![0.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Tensor::from_f64(vec![2, 0], vec![]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Tensor::from_f64(vec![2], vec![f64::NAN, 0.0]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            Tensor::from_f32(vec![1], vec![f32::INFINITY]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn sample_set_alignment() {
        let imgs: Vec<Tensor> = (0..3)
            .map(|_| Tensor::from_f32(vec![3, 2, 2], vec![0.0; 12]).unwrap())
            .collect();
        let styles: Vec<Vector> = (0..3)
            .map(|_| Vector::from_f32(vec![0.1, 0.2, 0.3]).unwrap())
            .collect();
        let set = SampleSet::new(Some(imgs.clone()), None, Some(styles), None).unwrap();
        assert_eq!(set.len(), 3);

        let styles_short: Vec<Vector> = (0..2)
            .map(|_| Vector::from_f32(vec![0.1]).unwrap())
            .collect();
        assert!(SampleSet::new(Some(imgs), None, Some(styles_short), None).is_err());
    }

    #[test]
    fn sample_set_needs_two_samples() {
        let imgs = vec![Tensor::from_f32(vec![1, 2, 2], vec![0.0; 4]).unwrap()];
        assert!(matches!(
            SampleSet::new(Some(imgs), None, None, None),
            Err(Error::Shape(_))
        ));
    }
}
