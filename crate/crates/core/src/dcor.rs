//! Empirical distance covariance and distance correlation between two N-row
//! sample matrices.
//!
//! The estimator is the V-statistic form: Euclidean distance matrices are
//! double-centered (subtract row and column means, add back the grand mean),
//! and `dcov(X, Y) = sqrt(sum_ij A_ij B_ij / N^2)`. V-centering guarantees
//! the sum under the square root is nonnegative up to rounding, and keeps
//! `dcor` in `[0, 1]`.
//!
//! Two kernels are provided: [`dcor`] materializes both centered matrices,
//! [`dcor_blocked`] streams over row blocks so the N×N matrices are never
//! resident at once. Both reduce in a fixed order, so results are
//! reproducible at a given block size regardless of thread count.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

/// Relative slack permitted when clamping `dcor` into `[0, 1]`.
const CLAMP_TOL: f64 = 1e-9;
/// A product sum below this raises a numerical error instead of clamping.
const NEGATIVE_SUM_GUARD: f64 = -1e-12;
/// Row-block size used internally by the dense kernels.
const GEMM_BLOCK: usize = 256;

/// Compensated (Neumaier) summation; keeps long reductions near eps accuracy.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn total(self) -> f64 {
        self.sum + self.comp
    }
}

/// N×N doubly-centered Euclidean distance matrix (the `A`/`B` of the dcov
/// product). Every row and column sums to zero up to rounding.
#[derive(Clone, Debug)]
pub struct CenteredDistanceMatrix {
    entries: Array2<f64>,
}

impl CenteredDistanceMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Check symmetry and zero row/column sums, with the stated tolerances.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let e = &self.entries;
        for i in 0..n {
            for j in (i + 1)..n {
                if (e[[i, j]] - e[[j, i]]).abs() > 1e-12 {
                    return Err(Error::numerical(format!(
                        "centered matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let tol = n as f64 * 1e-9;
        for i in 0..n {
            let row: f64 = e.row(i).sum();
            let col: f64 = e.column(i).sum();
            if row.abs() > tol || col.abs() > tol {
                return Err(Error::numerical(format!(
                    "centered matrix row/col {i} sums to ({row:.3e},{col:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Scalar components of a distance-correlation evaluation.
#[derive(Clone, Copy, Debug)]
pub struct DcorResult {
    /// Normalized coefficient in `[0, 1]`.
    pub dcor: f64,
    pub dcov_xy: f64,
    pub dcov_xx: f64,
    pub dcov_yy: f64,
    pub n: usize,
}

fn check_rows(name: &str, x: &ArrayView2<f64>) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::shape(format!(
            "{name} needs at least 2 rows, got {}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::shape(format!("{name} needs at least 1 column")));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::input(format!("{name} contains non-finite entries")));
    }
    Ok(())
}

/// Copy of `x` with every column shifted to zero mean. Distances are
/// translation invariant, so this is a no-op mathematically; it shrinks the
/// magnitudes entering `|x|^2 + |y|^2 - 2xy` and with it the cancellation.
fn column_centered(x: &ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mut xc = x.to_owned();
    let means = xc.sum_axis(ndarray::Axis(0)) / n;
    for mut row in xc.rows_mut() {
        row -= &means;
    }
    xc
}

fn row_sq_norms(x: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(x.rows().into_iter().map(|r| r.dot(&r)))
}

/// Distance rows `dist[i - i0][j]` for the row block `i0..i1`, written via a
/// single GEMM against the whole matrix.
fn distance_block(xc: &Array2<f64>, sq: &Array1<f64>, i0: usize, i1: usize, out: &mut [f64]) {
    let n = xc.nrows();
    let d = xc.ncols();
    let xs = xc.as_slice().expect("row-major");
    debug_assert_eq!(out.len(), (i1 - i0) * n);
    unsafe {
        // out = Xc[i0..i1] * Xc^T
        matrixmultiply::dgemm(
            i1 - i0,
            d,
            n,
            1.0,
            xs.as_ptr().add(i0 * d),
            d as isize,
            1,
            xs.as_ptr(),
            1,
            d as isize,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    for bi in 0..(i1 - i0) {
        let i = i0 + bi;
        let row = &mut out[bi * n..(bi + 1) * n];
        for (j, v) in row.iter_mut().enumerate() {
            if j == i {
                *v = 0.0;
            } else {
                *v = (sq[i] + sq[j] - 2.0 * *v).max(0.0).sqrt();
            }
        }
    }
}

/// Full N×N Euclidean distance matrix between the rows of `x`.
///
/// Uses the stable Gram form `sqrt(max(0, |x|^2 + |y|^2 - 2 x.y))` on
/// column-centered data. The diagonal is exactly zero and the result is
/// exactly symmetric (the upper triangle is mirrored).
pub fn pairwise_distances(x: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_rows("input", &x)?;
    let n = x.nrows();
    let xc = column_centered(&x);
    let sq = row_sq_norms(&xc);

    let mut dist = Array2::<f64>::zeros((n, n));
    {
        let buf = dist.as_slice_mut().expect("row-major");
        buf.par_chunks_mut(GEMM_BLOCK * n)
            .enumerate()
            .for_each(|(b, chunk)| {
                let i0 = b * GEMM_BLOCK;
                let i1 = (i0 + GEMM_BLOCK).min(n);
                distance_block(&xc, &sq, i0, i1, chunk);
            });
    }
    // Exact symmetry: mirror the upper triangle into the lower.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist[[i, j]];
            dist[[j, i]] = v;
        }
    }
    Ok(dist)
}

/// V-centering: `a_ij = d_ij - rowmean_i - colmean_j + grandmean`.
pub fn double_center(d: ArrayView2<f64>) -> Result<CenteredDistanceMatrix> {
    let n = d.nrows();
    if n != d.ncols() {
        return Err(Error::shape(format!(
            "double centering needs a square matrix, got {n}x{}",
            d.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::shape("double centering needs at least 2 samples"));
    }
    if !d.iter().all(|v| v.is_finite()) {
        return Err(Error::input("distance matrix contains non-finite entries"));
    }
    let max_abs = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sym_tol = 1e-9 * (1.0 + max_abs);
    for i in 0..n {
        for j in (i + 1)..n {
            if (d[[i, j]] - d[[j, i]]).abs() > sym_tol {
                return Err(Error::input(format!(
                    "distance matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }

    let mut row_means = vec![0.0f64; n];
    let mut grand = Kahan::default();
    for i in 0..n {
        let mut acc = Kahan::default();
        for v in d.row(i) {
            acc.add(*v);
        }
        let s = acc.total();
        row_means[i] = s / n as f64;
        grand.add(s);
    }
    let grand_mean = grand.total() / (n as f64 * n as f64);

    let mut entries = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            // column mean equals row mean for a symmetric matrix
            entries[[i, j]] = d[[i, j]] - row_means[i] - row_means[j] + grand_mean;
        }
    }
    Ok(CenteredDistanceMatrix { entries })
}

/// Centered distance matrix straight from an N×D row matrix.
pub fn centered_from_rows(x: ArrayView2<f64>) -> Result<CenteredDistanceMatrix> {
    let d = pairwise_distances(x)?;
    double_center(d.view())
}

/// `sqrt(sum_ij A_ij B_ij / N^2)` over two centered matrices.
pub fn dcov_from_centered(a: &CenteredDistanceMatrix, b: &CenteredDistanceMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::shape(format!(
            "centered matrices disagree on N: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let av = a.entries.as_slice().expect("row-major");
    let bv = b.entries.as_slice().expect("row-major");
    let mut acc = Kahan::default();
    for (x, y) in av.iter().zip(bv.iter()) {
        acc.add(x * y);
    }
    let mean = acc.total() / (a.n() as f64 * a.n() as f64);
    sqrt_guarded(mean)
}

fn sqrt_guarded(mean_product: f64) -> Result<f64> {
    if mean_product < NEGATIVE_SUM_GUARD {
        return Err(Error::numerical(format!(
            "centered product sum is {mean_product:.3e}; V-centering should keep it nonnegative"
        )));
    }
    Ok(mean_product.max(0.0).sqrt())
}

/// Distance covariance between two N-row matrices.
pub fn dcov(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    check_pair(&x, &y)?;
    let a = centered_from_rows(x)?;
    let b = centered_from_rows(y)?;
    dcov_from_centered(&a, &b)
}

fn check_pair(x: &ArrayView2<f64>, y: &ArrayView2<f64>) -> Result<()> {
    check_rows("X", x)?;
    check_rows("Y", y)?;
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    Ok(())
}

/// Assemble a [`DcorResult`] from the three covariance components, applying
/// the degenerate-input check and range clamp.
pub fn dcor_from_parts(dcov_xy: f64, dcov_xx: f64, dcov_yy: f64, n: usize) -> Result<DcorResult> {
    if dcov_xx == 0.0 || dcov_yy == 0.0 {
        // A constant representation has no distance variance; returning 0
        // would read as "perfectly disentangled", which is the opposite of
        // what a collapsed representation means.
        return Err(Error::degenerate(
            "constant representation: distance correlation is undefined",
        ));
    }
    let raw = dcov_xy / (dcov_xx * dcov_yy).sqrt();
    if raw < -CLAMP_TOL || raw > 1.0 + CLAMP_TOL {
        return Err(Error::numerical(format!(
            "distance correlation {raw} outside [0,1] beyond clamp tolerance"
        )));
    }
    Ok(DcorResult {
        dcor: raw.clamp(0.0, 1.0),
        dcov_xy,
        dcov_xx,
        dcov_yy,
        n,
    })
}

/// Distance correlation between two N-row matrices (dense kernel).
pub fn dcor(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<DcorResult> {
    check_pair(&x, &y)?;
    let a = centered_from_rows(x)?;
    let b = centered_from_rows(y)?;
    let dcov_xy = dcov_from_centered(&a, &b)?;
    let dcov_xx = dcov_from_centered(&a, &a)?;
    let dcov_yy = dcov_from_centered(&b, &b)?;
    dcor_from_parts(dcov_xy, dcov_xx, dcov_yy, x.nrows())
}

struct BlockedSide {
    xc: Array2<f64>,
    sq: Array1<f64>,
    row_means: Vec<f64>,
    grand_mean: f64,
}

fn blocked_side_stats(x: &ArrayView2<f64>, block: usize) -> BlockedSide {
    let n = x.nrows();
    let xc = column_centered(x);
    let sq = row_sq_norms(&xc);
    let mut row_sums = vec![0.0f64; n];
    row_sums
        .par_chunks_mut(block)
        .enumerate()
        .for_each(|(b, sums)| {
            let i0 = b * block;
            let i1 = i0 + sums.len();
            let mut rows = vec![0.0f64; (i1 - i0) * n];
            distance_block(&xc, &sq, i0, i1, &mut rows);
            for (bi, s) in sums.iter_mut().enumerate() {
                let mut acc = Kahan::default();
                for v in &rows[bi * n..(bi + 1) * n] {
                    acc.add(*v);
                }
                *s = acc.total();
            }
        });
    let mut grand = Kahan::default();
    for &s in &row_sums {
        grand.add(s);
    }
    let grand_mean = grand.total() / (n as f64 * n as f64);
    let row_means: Vec<f64> = row_sums.iter().map(|s| s / n as f64).collect();
    BlockedSide {
        xc,
        sq,
        row_means,
        grand_mean,
    }
}

/// Distance correlation computed in row blocks of size `block`.
///
/// Row means and grand means are precomputed in a first streaming pass, then
/// centered products are accumulated block by block, so neither N×N matrix is
/// ever materialized. Blocks may be evaluated in parallel; the final
/// reduction always runs in block-index order.
pub fn dcor_blocked(x: ArrayView2<f64>, y: ArrayView2<f64>, block: usize) -> Result<DcorResult> {
    check_pair(&x, &y)?;
    if block == 0 {
        return Err(Error::shape("block size must be >= 1"));
    }
    let n = x.nrows();
    let block = block.min(n);

    let sx = blocked_side_stats(&x, block);
    let sy = blocked_side_stats(&y, block);

    let n_blocks = n.div_ceil(block);
    let partials: Vec<(f64, f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let i0 = b * block;
            let i1 = (i0 + block).min(n);
            let rows = i1 - i0;
            let mut da = vec![0.0f64; rows * n];
            let mut db = vec![0.0f64; rows * n];
            distance_block(&sx.xc, &sx.sq, i0, i1, &mut da);
            distance_block(&sy.xc, &sy.sq, i0, i1, &mut db);
            let mut axy = Kahan::default();
            let mut axx = Kahan::default();
            let mut ayy = Kahan::default();
            for bi in 0..rows {
                let i = i0 + bi;
                for j in 0..n {
                    let a = da[bi * n + j] - sx.row_means[i] - sx.row_means[j] + sx.grand_mean;
                    let bb = db[bi * n + j] - sy.row_means[i] - sy.row_means[j] + sy.grand_mean;
                    axy.add(a * bb);
                    axx.add(a * a);
                    ayy.add(bb * bb);
                }
            }
            (axy.total(), axx.total(), ayy.total())
        })
        .collect();

    let nn = n as f64 * n as f64;
    let mut sxy = Kahan::default();
    let mut sxx = Kahan::default();
    let mut syy = Kahan::default();
    for (a, b, c) in partials {
        sxy.add(a);
        sxx.add(b);
        syy.add(c);
    }
    let dcov_xy = sqrt_guarded(sxy.total() / nn)?;
    let dcov_xx = sqrt_guarded(sxx.total() / nn)?;
    let dcov_yy = sqrt_guarded(syy.total() / nn)?;
    dcor_from_parts(dcov_xy, dcov_xx, dcov_yy, n)
}
