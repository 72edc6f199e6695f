use super::scalar::Scalar;

/// A batch of activations: `n` samples of identical `shape`, stored
/// contiguously sample-major.
#[derive(Clone, Debug)]
pub struct Batch<T> {
    pub n: usize,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Batch<T> {
    pub fn zeros(n: usize, shape: &[usize]) -> Self {
        let len = n * shape.iter().product::<usize>();
        Batch {
            n,
            shape: shape.to_vec(),
            data: vec![T::ZERO; len],
        }
    }

    pub fn from_vec(n: usize, shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * shape.iter().product::<usize>());
        Batch {
            n,
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn sample_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn sample(&self, i: usize) -> &[T] {
        let len = self.sample_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let len = self.sample_len();
        &mut self.data[i * len..(i + 1) * len]
    }

    /// Gather `rows` into a new batch (minibatch assembly).
    pub fn gather(&self, rows: &[usize]) -> Batch<T> {
        let len = self.sample_len();
        let mut data = Vec::with_capacity(rows.len() * len);
        for &r in rows {
            data.extend_from_slice(self.sample(r));
        }
        Batch {
            n: rows.len(),
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite_scalar())
    }

    /// True when every sample is bit-identical to the first. Constant-input
    /// batches admit a single-forward training shortcut.
    pub fn all_samples_identical(&self) -> bool {
        let len = self.sample_len();
        if self.n <= 1 {
            return true;
        }
        let first = &self.data[..len];
        (1..self.n).all(|i| {
            self.data[i * len..(i + 1) * len]
                .iter()
                .zip(first)
                .all(|(a, b)| a.to_f64().to_bits() == b.to_f64().to_bits())
        })
    }
}

/// Reusable workspaces for the im2col buffers.
#[derive(Default)]
pub(crate) struct Scratch<T> {
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    pub fn new() -> Self {
        Scratch {
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    fn ensure(buf: &mut Vec<T>, len: usize) -> &mut [T] {
        if buf.len() < len {
            buf.resize(len, T::ZERO);
        }
        &mut buf[..len]
    }

    pub fn buf_a(&mut self, len: usize) -> &mut [T] {
        Self::ensure(&mut self.a, len)
    }

    pub fn buf_ab(&mut self, len_a: usize, len_b: usize) -> (&mut [T], &mut [T]) {
        (
            Self::ensure(&mut self.a, len_a),
            Self::ensure(&mut self.b, len_b),
        )
    }
}

/// Range of grid positions `g` for which `g*stride + k - pad` lands inside
/// `[0, img)`.
#[inline]
fn grid_range(k: usize, pad: usize, stride: usize, img: usize, grid: usize) -> (usize, usize) {
    let lo = if k >= pad {
        0
    } else {
        (pad - k).div_ceil(stride)
    };
    let hi = if img + pad > k {
        ((img - 1 + pad - k) / stride + 1).min(grid)
    } else {
        0
    };
    (lo.min(hi), hi)
}

/// Unfold `img` ([c, h, w]) into `cols` ([c*kh*kw, hg*wg]) where column
/// `(gh, gw)` reads `img[ci][gh*stride + ki - pad][gw*stride + kj - pad]`
/// (zero outside). Every cell of `cols` is written.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    img: &[T],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    hg: usize,
    wg: usize,
    cols: &mut [T],
) {
    debug_assert_eq!(img.len(), c * h * w);
    debug_assert_eq!(cols.len(), c * kh * kw * hg * wg);
    let grid = hg * wg;
    for ci in 0..c {
        let plane = &img[ci * h * w..(ci + 1) * h * w];
        for ki in 0..kh {
            let (gh_lo, gh_hi) = grid_range(ki, pad, stride, h, hg);
            for kj in 0..kw {
                let (gw_lo, gw_hi) = grid_range(kj, pad, stride, w, wg);
                let dst = &mut cols[((ci * kh + ki) * kw + kj) * grid..][..grid];
                if gh_lo > 0 {
                    dst[..gh_lo * wg].fill(T::ZERO);
                }
                if gh_hi * wg < grid {
                    dst[gh_hi * wg..].fill(T::ZERO);
                }
                for gh in gh_lo..gh_hi {
                    let ih = gh * stride + ki - pad;
                    let src = &plane[ih * w..][..w];
                    let row = &mut dst[gh * wg..][..wg];
                    row[..gw_lo].fill(T::ZERO);
                    row[gw_hi..].fill(T::ZERO);
                    if stride == 1 {
                        let off = gw_lo + kj - pad;
                        row[gw_lo..gw_hi].copy_from_slice(&src[off..off + (gw_hi - gw_lo)]);
                    } else {
                        for (gw, o) in row[gw_lo..gw_hi].iter_mut().enumerate() {
                            *o = src[(gw_lo + gw) * stride + kj - pad];
                        }
                    }
                }
            }
        }
    }
}

/// Fold `cols` back into `img` by scatter-add: the adjoint of [`im2col`].
/// The caller zeroes `img` first.
#[allow(clippy::too_many_arguments)]
fn col2im_add<T: Scalar>(
    cols: &[T],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    hg: usize,
    wg: usize,
    img: &mut [T],
) {
    debug_assert_eq!(img.len(), c * h * w);
    debug_assert_eq!(cols.len(), c * kh * kw * hg * wg);
    let grid = hg * wg;
    for ci in 0..c {
        let plane = &mut img[ci * h * w..(ci + 1) * h * w];
        for ki in 0..kh {
            let (gh_lo, gh_hi) = grid_range(ki, pad, stride, h, hg);
            for kj in 0..kw {
                let (gw_lo, gw_hi) = grid_range(kj, pad, stride, w, wg);
                let src_cols = &cols[((ci * kh + ki) * kw + kj) * grid..][..grid];
                for gh in gh_lo..gh_hi {
                    let ih = gh * stride + ki - pad;
                    let dst = &mut plane[ih * w..][..w];
                    let srow = &src_cols[gh * wg..][..wg];
                    if stride == 1 {
                        let off = gw_lo + kj - pad;
                        for (s, d) in srow[gw_lo..gw_hi].iter().zip(dst[off..].iter_mut()) {
                            *d += *s;
                        }
                    } else {
                        for (gw, s) in srow[gw_lo..gw_hi].iter().enumerate() {
                            dst[(gw_lo + gw) * stride + kj - pad] += *s;
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of one parameterized layer.
#[derive(Clone, Debug)]
pub struct ParamGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Convolution-family parameters. For `Conv` the weight is laid out
/// `[out_ch, in_ch*kh*kw]`; for `Deconv` it is `[in_ch, out_ch*kh*kw]`
/// (the gradient-of-conv view).
#[derive(Clone, Debug)]
pub(crate) struct ConvParams<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct FcParams<T> {
    pub in_f: usize,
    pub out_f: usize,
    /// `[out_f, in_f]`, row-major.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug)]
pub(crate) enum Layer<T> {
    Conv(ConvParams<T>),
    Deconv(ConvParams<T>),
    Fc(FcParams<T>),
    InstanceNorm { eps: f64 },
    LeakyRelu { slope: f64 },
    Tanh,
    Flatten,
    Reshape,
}

/// Per-layer values cached by the forward pass for backprop.
#[derive(Clone, Debug)]
pub(crate) enum Aux {
    None,
    /// Instance norm: `1/sqrt(var + eps)` per (sample, channel).
    InvStd(Vec<f64>),
}

fn chw(shape: &[usize]) -> (usize, usize, usize) {
    (shape[0], shape[1], shape[2])
}

impl<T: Scalar> Layer<T> {
    pub fn params(&self) -> Option<(&Vec<T>, &Vec<T>)> {
        match self {
            Layer::Conv(p) | Layer::Deconv(p) => Some((&p.weight, &p.bias)),
            Layer::Fc(p) => Some((&p.weight, &p.bias)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Vec<T>, &mut Vec<T>)> {
        match self {
            Layer::Conv(p) | Layer::Deconv(p) => Some((&mut p.weight, &mut p.bias)),
            Layer::Fc(p) => Some((&mut p.weight, &mut p.bias)),
            _ => None,
        }
    }

    pub fn forward(
        &self,
        x: &Batch<T>,
        out_shape: &[usize],
        scratch: &mut Scratch<T>,
    ) -> (Batch<T>, Aux) {
        let mut y = Batch::zeros(x.n, out_shape);
        let mut aux = Aux::None;
        match self {
            Layer::Conv(p) => {
                let (_, h, w) = chw(&x.shape);
                let (_, ho, wo) = chw(out_shape);
                let kk = p.in_ch * p.kh * p.kw;
                let grid = ho * wo;
                let cols = scratch.buf_a(kk * grid);
                for s in 0..x.n {
                    im2col(
                        x.sample(s),
                        p.in_ch,
                        h,
                        w,
                        p.kh,
                        p.kw,
                        p.stride,
                        p.pad,
                        ho,
                        wo,
                        cols,
                    );
                    let out = y.sample_mut(s);
                    unsafe {
                        T::gemm(
                            p.out_ch,
                            kk,
                            grid,
                            T::ONE,
                            p.weight.as_ptr(),
                            kk as isize,
                            1,
                            cols.as_ptr(),
                            grid as isize,
                            1,
                            T::ZERO,
                            out.as_mut_ptr(),
                            grid as isize,
                            1,
                        );
                    }
                    for co in 0..p.out_ch {
                        let b = p.bias[co];
                        for v in &mut out[co * grid..(co + 1) * grid] {
                            *v += b;
                        }
                    }
                }
            }
            Layer::Deconv(p) => {
                let (_, hi, wi) = chw(&x.shape);
                let (_, ho, wo) = chw(out_shape);
                let kk = p.out_ch * p.kh * p.kw;
                let grid_in = hi * wi;
                let cols = scratch.buf_a(kk * grid_in);
                for s in 0..x.n {
                    // cols = W^T x, then scatter-add into the output plane
                    unsafe {
                        T::gemm(
                            kk,
                            p.in_ch,
                            grid_in,
                            T::ONE,
                            p.weight.as_ptr(),
                            1,
                            kk as isize,
                            x.sample(s).as_ptr(),
                            grid_in as isize,
                            1,
                            T::ZERO,
                            cols.as_mut_ptr(),
                            grid_in as isize,
                            1,
                        );
                    }
                    let out = y.sample_mut(s);
                    col2im_add(
                        cols, p.out_ch, ho, wo, p.kh, p.kw, p.stride, p.pad, hi, wi, out,
                    );
                    let plane = ho * wo;
                    for co in 0..p.out_ch {
                        let b = p.bias[co];
                        for v in &mut out[co * plane..(co + 1) * plane] {
                            *v += b;
                        }
                    }
                }
            }
            Layer::Fc(p) => {
                // Y = X W^T + b over the whole batch
                unsafe {
                    T::gemm(
                        x.n,
                        p.in_f,
                        p.out_f,
                        T::ONE,
                        x.data.as_ptr(),
                        p.in_f as isize,
                        1,
                        p.weight.as_ptr(),
                        1,
                        p.in_f as isize,
                        T::ZERO,
                        y.data.as_mut_ptr(),
                        p.out_f as isize,
                        1,
                    );
                }
                for s in 0..x.n {
                    let out = y.sample_mut(s);
                    for (o, b) in out.iter_mut().zip(p.bias.iter()) {
                        *o += *b;
                    }
                }
            }
            Layer::InstanceNorm { eps } => {
                let (c, h, w) = chw(&x.shape);
                let plane = h * w;
                let mut inv_std = Vec::with_capacity(x.n * c);
                for s in 0..x.n {
                    let xs = x.sample(s);
                    let ys = y.sample_mut(s);
                    for ch in 0..c {
                        let xp = &xs[ch * plane..(ch + 1) * plane];
                        let mut mean = 0.0f64;
                        for v in xp {
                            mean += v.to_f64();
                        }
                        mean /= plane as f64;
                        let mut var = 0.0f64;
                        for v in xp {
                            let d = v.to_f64() - mean;
                            var += d * d;
                        }
                        var /= plane as f64;
                        let inv = 1.0 / (var + eps).sqrt();
                        inv_std.push(inv);
                        let m = T::from_f64(mean);
                        let iv = T::from_f64(inv);
                        for (o, v) in ys[ch * plane..(ch + 1) * plane].iter_mut().zip(xp.iter()) {
                            *o = (*v - m) * iv;
                        }
                    }
                }
                aux = Aux::InvStd(inv_std);
            }
            Layer::LeakyRelu { slope } => {
                let a = T::from_f64(*slope);
                for (o, v) in y.data.iter_mut().zip(x.data.iter()) {
                    *o = if *v > T::ZERO { *v } else { a * *v };
                }
            }
            Layer::Tanh => {
                let hi = T::MAX_INSIDE_ONE;
                let lo = -T::MAX_INSIDE_ONE;
                for (o, v) in y.data.iter_mut().zip(x.data.iter()) {
                    let t = v.tanh_scalar();
                    *o = if t > hi {
                        hi
                    } else if t < lo {
                        lo
                    } else {
                        t
                    };
                }
            }
            Layer::Flatten | Layer::Reshape => {
                y.data.copy_from_slice(&x.data);
            }
        }
        (y, aux)
    }

    /// Gradient with respect to input and (when present) parameters.
    pub fn backward(
        &self,
        x: &Batch<T>,
        y: &Batch<T>,
        aux: &Aux,
        gy: &Batch<T>,
        scratch: &mut Scratch<T>,
    ) -> (Batch<T>, Option<ParamGrad<T>>) {
        let mut gx = Batch::zeros(x.n, &x.shape);
        match self {
            Layer::Conv(p) => {
                let (_, h, w) = chw(&x.shape);
                let (_, ho, wo) = chw(&y.shape);
                let kk = p.in_ch * p.kh * p.kw;
                let grid = ho * wo;
                let mut grad = ParamGrad {
                    weight: vec![T::ZERO; p.weight.len()],
                    bias: vec![T::ZERO; p.bias.len()],
                };
                let (cols, gcols) = scratch.buf_ab(kk * grid, kk * grid);
                for s in 0..x.n {
                    let gys = gy.sample(s);
                    im2col(
                        x.sample(s),
                        p.in_ch,
                        h,
                        w,
                        p.kh,
                        p.kw,
                        p.stride,
                        p.pad,
                        ho,
                        wo,
                        cols,
                    );
                    unsafe {
                        // gW += gy cols^T
                        T::gemm(
                            p.out_ch,
                            grid,
                            kk,
                            T::ONE,
                            gys.as_ptr(),
                            grid as isize,
                            1,
                            cols.as_ptr(),
                            1,
                            grid as isize,
                            T::ONE,
                            grad.weight.as_mut_ptr(),
                            kk as isize,
                            1,
                        );
                        // gcols = W^T gy
                        T::gemm(
                            kk,
                            p.out_ch,
                            grid,
                            T::ONE,
                            p.weight.as_ptr(),
                            1,
                            kk as isize,
                            gys.as_ptr(),
                            grid as isize,
                            1,
                            T::ZERO,
                            gcols.as_mut_ptr(),
                            grid as isize,
                            1,
                        );
                    }
                    col2im_add(
                        gcols,
                        p.in_ch,
                        h,
                        w,
                        p.kh,
                        p.kw,
                        p.stride,
                        p.pad,
                        ho,
                        wo,
                        gx.sample_mut(s),
                    );
                    for co in 0..p.out_ch {
                        let mut acc = 0.0f64;
                        for v in &gys[co * grid..(co + 1) * grid] {
                            acc += v.to_f64();
                        }
                        grad.bias[co] += T::from_f64(acc);
                    }
                }
                return (gx, Some(grad));
            }
            Layer::Deconv(p) => {
                let (_, hi, wi) = chw(&x.shape);
                let (_, ho, wo) = chw(&y.shape);
                let kk = p.out_ch * p.kh * p.kw;
                let grid_in = hi * wi;
                let plane_out = ho * wo;
                let mut grad = ParamGrad {
                    weight: vec![T::ZERO; p.weight.len()],
                    bias: vec![T::ZERO; p.bias.len()],
                };
                let gcols = scratch.buf_a(kk * grid_in);
                for s in 0..x.n {
                    let gys = gy.sample(s);
                    im2col(
                        gys, p.out_ch, ho, wo, p.kh, p.kw, p.stride, p.pad, hi, wi, gcols,
                    );
                    unsafe {
                        // gx = W gcols
                        T::gemm(
                            p.in_ch,
                            kk,
                            grid_in,
                            T::ONE,
                            p.weight.as_ptr(),
                            kk as isize,
                            1,
                            gcols.as_ptr(),
                            grid_in as isize,
                            1,
                            T::ZERO,
                            gx.sample_mut(s).as_mut_ptr(),
                            grid_in as isize,
                            1,
                        );
                        // gW += x gcols^T
                        T::gemm(
                            p.in_ch,
                            grid_in,
                            kk,
                            T::ONE,
                            x.sample(s).as_ptr(),
                            grid_in as isize,
                            1,
                            gcols.as_ptr(),
                            1,
                            grid_in as isize,
                            T::ONE,
                            grad.weight.as_mut_ptr(),
                            kk as isize,
                            1,
                        );
                    }
                    for co in 0..p.out_ch {
                        let mut acc = 0.0f64;
                        for v in &gys[co * plane_out..(co + 1) * plane_out] {
                            acc += v.to_f64();
                        }
                        grad.bias[co] += T::from_f64(acc);
                    }
                }
                return (gx, Some(grad));
            }
            Layer::Fc(p) => {
                let mut grad = ParamGrad {
                    weight: vec![T::ZERO; p.weight.len()],
                    bias: vec![T::ZERO; p.bias.len()],
                };
                unsafe {
                    // gx = gy W
                    T::gemm(
                        x.n,
                        p.out_f,
                        p.in_f,
                        T::ONE,
                        gy.data.as_ptr(),
                        p.out_f as isize,
                        1,
                        p.weight.as_ptr(),
                        p.in_f as isize,
                        1,
                        T::ZERO,
                        gx.data.as_mut_ptr(),
                        p.in_f as isize,
                        1,
                    );
                    // gW = gy^T x
                    T::gemm(
                        p.out_f,
                        x.n,
                        p.in_f,
                        T::ONE,
                        gy.data.as_ptr(),
                        1,
                        p.out_f as isize,
                        x.data.as_ptr(),
                        p.in_f as isize,
                        1,
                        T::ZERO,
                        grad.weight.as_mut_ptr(),
                        p.in_f as isize,
                        1,
                    );
                }
                for s in 0..x.n {
                    for (gb, g) in grad.bias.iter_mut().zip(gy.sample(s).iter()) {
                        *gb += *g;
                    }
                }
                return (gx, Some(grad));
            }
            Layer::InstanceNorm { .. } => {
                let inv_std = match aux {
                    Aux::InvStd(v) => v,
                    Aux::None => unreachable!("instance norm forward stores inv_std"),
                };
                let (c, h, w) = chw(&x.shape);
                let plane = h * w;
                for s in 0..x.n {
                    let ys = y.sample(s);
                    let gys = gy.sample(s);
                    let gxs = gx.sample_mut(s);
                    for ch in 0..c {
                        let inv = inv_std[s * c + ch];
                        let yp = &ys[ch * plane..(ch + 1) * plane];
                        let gp = &gys[ch * plane..(ch + 1) * plane];
                        let mut g_mean = 0.0f64;
                        let mut gy_dot = 0.0f64;
                        for (g, yv) in gp.iter().zip(yp.iter()) {
                            g_mean += g.to_f64();
                            gy_dot += g.to_f64() * yv.to_f64();
                        }
                        g_mean /= plane as f64;
                        gy_dot /= plane as f64;
                        let gm = T::from_f64(g_mean);
                        let gd = T::from_f64(gy_dot);
                        let iv = T::from_f64(inv);
                        for ((o, g), yv) in gxs[ch * plane..(ch + 1) * plane]
                            .iter_mut()
                            .zip(gp.iter())
                            .zip(yp.iter())
                        {
                            *o = iv * (*g - gm - *yv * gd);
                        }
                    }
                }
            }
            Layer::LeakyRelu { slope } => {
                let a = T::from_f64(*slope);
                for ((o, g), v) in gx.data.iter_mut().zip(gy.data.iter()).zip(x.data.iter()) {
                    *o = if *v > T::ZERO { *g } else { a * *g };
                }
            }
            Layer::Tanh => {
                for ((o, g), yv) in gx.data.iter_mut().zip(gy.data.iter()).zip(y.data.iter()) {
                    *o = *g * (T::ONE - *yv * *yv);
                }
            }
            Layer::Flatten | Layer::Reshape => {
                gx.data.copy_from_slice(&gy.data);
            }
        }
        (gx, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn im2col_col2im_are_adjoint() {
        // <im2col(x), c> == <x, col2im(c)> for random x, c
        let (c, h, w, kh, kw, stride, pad) = (2usize, 5usize, 4usize, 3usize, 2usize, 2usize, 1usize);
        let hg = (h + 2 * pad - kh) / stride + 1;
        let wg = (w + 2 * pad - kw) / stride + 1;
        let mut s = crate::rng::Stream::new(5);
        let x: Vec<f64> = (0..c * h * w).map(|_| s.next_f64() - 0.5).collect();
        let cvals: Vec<f64> = (0..c * kh * kw * hg * wg).map(|_| s.next_f64() - 0.5).collect();

        let mut cols = vec![0.0f64; c * kh * kw * hg * wg];
        im2col(&x, c, h, w, kh, kw, stride, pad, hg, wg, &mut cols);
        let lhs: f64 = cols.iter().zip(cvals.iter()).map(|(a, b)| a * b).sum();

        let mut img = vec![0.0f64; c * h * w];
        col2im_add(&cvals, c, h, w, kh, kw, stride, pad, hg, wg, &mut img);
        let rhs: f64 = img.iter().zip(x.iter()).map(|(a, b)| a * b).sum();

        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn leaky_relu_definition() {
        let layer: Layer<f64> = Layer::LeakyRelu { slope: 0.2 };
        let x = Batch::from_vec(1, &[2], vec![-1.0, 2.0]);
        let mut scratch = Scratch::new();
        let (y, _) = layer.forward(&x, &[2], &mut scratch);
        assert_eq!(y.data, vec![-0.2, 2.0]);
    }

    #[test]
    fn instance_norm_constant_plane_is_zero() {
        let layer: Layer<f64> = Layer::InstanceNorm { eps: 1e-5 };
        let x = Batch::from_vec(1, &[1, 2, 2], vec![3.0; 4]);
        let mut scratch = Scratch::new();
        let (y, _) = layer.forward(&x, &[1, 2, 2], &mut scratch);
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tanh_outputs_strictly_inside_unit_interval() {
        let layer: Layer<f32> = Layer::Tanh;
        let x = Batch::from_vec(1, &[3], vec![-50.0f32, 0.0, 50.0]);
        let mut scratch = Scratch::new();
        let (y, _) = layer.forward(&x, &[3], &mut scratch);
        assert!(y.data.iter().all(|&v| v > -1.0 && v < 1.0));
        assert_eq!(y.data[1], 0.0);
    }
}
