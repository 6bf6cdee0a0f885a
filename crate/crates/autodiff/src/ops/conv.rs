//! One-dimensional convolutions.
//!
//! Every conv-family op is a slice of one trilinear form
//!
//! ```text
//! T(x, k, y) = Σ x[b,c,i] · k[f,c,j] · y[b,f,l],   i = l·stride + j − offset
//! ```
//!
//! where `x` is the long "signal" side (`[B×C×signal_len]`), `y` the short
//! "frame" side (`[B×F×frame_len]`) and out-of-range `i` contribute zero.
//! `corr` computes ∂T/∂y (ordinary strided cross-correlation), `scatter`
//! computes ∂T/∂x (transposed convolution) and `kernel_grad` computes ∂T/∂k.
//! The derivatives of each are the other two, so the family is closed under
//! differentiation to any order.

use crate::error::{contract_err, shape_err, Result};
use crate::op::Op;
use crate::tensor::Tensor;

/// Index geometry shared by the three conv-family kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub stride: usize,
    /// Leading zero padding of the signal side (negative trims instead).
    pub offset: isize,
    pub kernel: usize,
    pub signal_len: usize,
    pub frame_len: usize,
}

impl ConvGeometry {
    /// Valid cross-correlation: no padding.
    pub fn valid(signal_len: usize, kernel: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(contract_err("conv1d", "stride must be >= 1"));
        }
        if kernel > signal_len {
            return Err(contract_err(
                "conv1d",
                format!("kernel {kernel} longer than input {signal_len}"),
            ));
        }
        Ok(Self {
            stride,
            offset: 0,
            kernel,
            signal_len,
            frame_len: (signal_len - kernel) / stride + 1,
        })
    }

    /// "Same" padding: `frame_len = ceil(signal_len / stride)`, padding split
    /// with the smaller half on the left.
    pub fn same(signal_len: usize, kernel: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(contract_err("conv1d", "stride must be >= 1"));
        }
        let frame_len = signal_len.div_ceil(stride);
        let needed = (frame_len - 1) * stride + kernel;
        let pad = needed.saturating_sub(signal_len);
        Ok(Self {
            stride,
            offset: (pad / 2) as isize,
            kernel,
            signal_len,
            frame_len,
        })
    }

    /// Transposed conv producing exactly `stride · input_len` samples. The raw
    /// scatter has length `(input_len − 1)·stride + kernel`; the surplus is
    /// trimmed with the smaller half on the left (or padded if negative).
    pub fn transpose_same(input_len: usize, kernel: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(contract_err("conv1d_transpose", "stride must be >= 1"));
        }
        let surplus = kernel as isize - stride as isize;
        Ok(Self {
            stride,
            offset: surplus.div_euclid(2),
            kernel,
            signal_len: stride * input_len,
            frame_len: input_len,
        })
    }

    /// Untrimmed transposed conv, output length `(input_len − 1)·stride + kernel`.
    pub fn transpose_raw(input_len: usize, kernel: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(contract_err("conv1d_transpose", "stride must be >= 1"));
        }
        Ok(Self {
            stride,
            offset: 0,
            kernel,
            signal_len: (input_len - 1) * stride + kernel,
            frame_len: input_len,
        })
    }

    /// Range of `l` for which `l·stride + j − offset` lands in the signal.
    #[inline]
    fn frame_range(&self, j: usize) -> (usize, usize) {
        let s = self.stride as isize;
        let shift = j as isize - self.offset;
        // need 0 <= l*s + shift < signal_len
        let lo = if shift >= 0 { 0 } else { (-shift + s - 1) / s };
        let hi_excl = {
            let lim = self.signal_len as isize - shift;
            if lim <= 0 {
                0
            } else {
                (lim + s - 1) / s
            }
        };
        let lo = (lo.max(0) as usize).min(self.frame_len);
        let hi = (hi_excl.max(0) as usize).min(self.frame_len);
        (lo, hi.max(lo))
    }
}

/// `cols[(c·K + j)·ld + col0 + l] = x[c, l·s + j − off]` (zero outside the signal).
fn im2col(x: &[f64], channels: usize, g: &ConvGeometry, cols: &mut [f64], ld: usize, col0: usize) {
    let (k, lout, s) = (g.kernel, g.frame_len, g.stride);
    for c in 0..channels {
        let xc = &x[c * g.signal_len..(c + 1) * g.signal_len];
        for j in 0..k {
            let start = (c * k + j) * ld + col0;
            let row = &mut cols[start..start + lout];
            let (lo, hi) = g.frame_range(j);
            row[..lo].fill(0.0);
            row[hi..].fill(0.0);
            if lo == hi {
                continue;
            }
            let first = (lo as isize * s as isize + j as isize - g.offset) as usize;
            if s == 1 {
                row[lo..hi].copy_from_slice(&xc[first..first + hi - lo]);
            } else {
                for (slot, v) in row[lo..hi].iter_mut().zip(xc[first..].iter().step_by(s)) {
                    *slot = *v;
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulate columns back onto the signal.
fn col2im(cols: &[f64], channels: usize, g: &ConvGeometry, x: &mut [f64], ld: usize, col0: usize) {
    let (k, lout, s) = (g.kernel, g.frame_len, g.stride);
    for c in 0..channels {
        let xc = &mut x[c * g.signal_len..(c + 1) * g.signal_len];
        for j in 0..k {
            let start = (c * k + j) * ld + col0;
            let row = &cols[start..start + lout];
            let (lo, hi) = g.frame_range(j);
            if lo == hi {
                continue;
            }
            let first = (lo as isize * s as isize + j as isize - g.offset) as usize;
            for (v, dst) in row[lo..hi].iter().zip(xc[first..].iter_mut().step_by(s)) {
                *dst += v;
            }
        }
    }
}

/// Row-major `c[m×n] = alpha·a·b + beta·c` with explicit strides for `a`, `b`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    debug_assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    // SAFETY: the debug assertions above describe the extents accessed;
    // callers size every buffer from the same geometry.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn check_kernel(op: &'static str, k: &Tensor, g: &ConvGeometry) -> Result<(usize, usize)> {
    k.expect_rank(op, 3)?;
    if k.shape()[2] != g.kernel {
        return Err(shape_err(
            op,
            format!("kernel width {} vs geometry {}", k.shape()[2], g.kernel),
        ));
    }
    Ok((k.shape()[0], k.shape()[1]))
}

fn check_side(op: &'static str, t: &Tensor, channels: usize, len: usize, what: &str) -> Result<usize> {
    t.expect_rank(op, 3)?;
    if t.shape()[1] != channels || t.shape()[2] != len {
        return Err(shape_err(
            op,
            format!(
                "{what} shape {:?}, expected [B, {channels}, {len}]",
                t.shape()
            ),
        ));
    }
    Ok(t.shape()[0])
}

fn corr_raw(x: &Tensor, k: &Tensor, g: &ConvGeometry) -> Result<Vec<f64>> {
    let (f, c) = check_kernel("conv1d", k, g)?;
    let b = check_side("conv1d", x, c, g.signal_len, "input")?;
    let ck = c * g.kernel;
    let lout = g.frame_len;
    let mut cols = vec![0.0; ck * lout];
    let mut out = vec![0.0; b * f * lout];
    for bi in 0..b {
        im2col(&x.data()[bi * c * g.signal_len..(bi + 1) * c * g.signal_len], c, g, &mut cols, lout, 0);
        gemm(f, ck, lout, k.data(), (ck, 1), &cols, (lout, 1), 0.0, &mut out[bi * f * lout..(bi + 1) * f * lout]);
    }
    Ok(out)
}

fn scatter_raw(y: &Tensor, k: &Tensor, g: &ConvGeometry) -> Result<Vec<f64>> {
    let (f, c) = check_kernel("conv1d_transpose", k, g)?;
    let b = check_side("conv1d_transpose", y, f, g.frame_len, "input")?;
    let ck = c * g.kernel;
    let lout = g.frame_len;
    let mut cols = vec![0.0; ck * lout];
    let mut out = vec![0.0; b * c * g.signal_len];
    for bi in 0..b {
        // cols[ck × lout] = kᵀ · y_b
        gemm(ck, f, lout, k.data(), (1, ck), &y.data()[bi * f * lout..(bi + 1) * f * lout], (lout, 1), 0.0, &mut cols);
        col2im(&cols, c, g, &mut out[bi * c * g.signal_len..(bi + 1) * c * g.signal_len], lout, 0);
    }
    Ok(out)
}

fn kernel_grad_raw(x: &Tensor, y: &Tensor, g: &ConvGeometry) -> Result<(Vec<f64>, Vec<usize>)> {
    x.expect_rank("conv1d_kernel_grad", 3)?;
    y.expect_rank("conv1d_kernel_grad", 3)?;
    let (b, c) = (x.shape()[0], x.shape()[1]);
    let f = y.shape()[1];
    check_side("conv1d_kernel_grad", x, c, g.signal_len, "signal")?;
    if check_side("conv1d_kernel_grad", y, f, g.frame_len, "frames")? != b {
        return Err(shape_err("conv1d_kernel_grad", "batch sizes differ"));
    }
    let ck = c * g.kernel;
    let lout = g.frame_len;
    let mut cols = vec![0.0; ck * lout];
    let mut out = vec![0.0; f * ck];
    for bi in 0..b {
        im2col(&x.data()[bi * c * g.signal_len..(bi + 1) * c * g.signal_len], c, g, &mut cols, lout, 0);
        // out[f × ck] += y_b[f × lout] · colsᵀ
        gemm(f, lout, ck, &y.data()[bi * f * lout..(bi + 1) * f * lout], (lout, 1), &cols, (1, lout), 1.0, &mut out);
    }
    Ok((out, vec![f, c, g.kernel]))
}

impl Tensor {
    /// ∂T/∂y: `x[B×C×signal_len]`, `k[F×C×K]` → `[B×F×frame_len]`.
    pub fn conv_corr(&self, k: &Tensor, g: ConvGeometry) -> Result<Tensor> {
        let data = corr_raw(self, k, &g)?;
        let shape = vec![self.shape()[0], k.shape()[0], g.frame_len];
        Ok(Tensor::from_op(data, shape, Op::ConvCorr(g), vec![self.clone(), k.clone()]))
    }

    /// ∂T/∂x: `y[B×F×frame_len]`, `k[F×C×K]` → `[B×C×signal_len]`.
    pub fn conv_scatter(&self, k: &Tensor, g: ConvGeometry) -> Result<Tensor> {
        let data = scatter_raw(self, k, &g)?;
        let shape = vec![self.shape()[0], k.shape()[1], g.signal_len];
        Ok(Tensor::from_op(data, shape, Op::ConvScatter(g), vec![self.clone(), k.clone()]))
    }

    /// ∂T/∂k: `x[B×C×signal_len]`, `y[B×F×frame_len]` → `[F×C×K]`.
    pub fn conv_kernel_grad(&self, y: &Tensor, g: ConvGeometry) -> Result<Tensor> {
        let (data, shape) = kernel_grad_raw(self, y, &g)?;
        Ok(Tensor::from_op(data, shape, Op::ConvKernelGrad(g), vec![self.clone(), y.clone()]))
    }

    /// Valid strided cross-correlation, `x[B×C×L]`, `k[F×C×K]` → `[B×F×L']`
    /// with `L' = (L − K)/stride + 1`.
    pub fn conv1d(&self, k: &Tensor, stride: usize) -> Result<Tensor> {
        self.expect_rank("conv1d", 3)?;
        k.expect_rank("conv1d", 3)?;
        let g = ConvGeometry::valid(self.shape()[2], k.shape()[2], stride)?;
        self.conv_corr(k, g)
    }

    /// Cross-correlation with "same" padding, output length `ceil(L/stride)`.
    pub fn conv1d_same(&self, k: &Tensor, stride: usize) -> Result<Tensor> {
        self.expect_rank("conv1d", 3)?;
        k.expect_rank("conv1d", 3)?;
        let g = ConvGeometry::same(self.shape()[2], k.shape()[2], stride)?;
        self.conv_corr(k, g)
    }

    /// Transposed conv, `x[B×C×L]`, `k[C×F×K]` → `[B×F×(stride·L)]`.
    pub fn conv1d_transpose(&self, k: &Tensor, stride: usize) -> Result<Tensor> {
        self.expect_rank("conv1d_transpose", 3)?;
        k.expect_rank("conv1d_transpose", 3)?;
        let g = ConvGeometry::transpose_same(self.shape()[2], k.shape()[2], stride)?;
        self.conv_scatter(k, g)
    }

    /// Untrimmed transposed conv, the exact adjoint of [`Tensor::conv1d`].
    pub fn conv1d_transpose_raw(&self, k: &Tensor, stride: usize) -> Result<Tensor> {
        self.expect_rank("conv1d_transpose", 3)?;
        k.expect_rank("conv1d_transpose", 3)?;
        let g = ConvGeometry::transpose_raw(self.shape()[2], k.shape()[2], stride)?;
        self.conv_scatter(k, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(data: &[f64], shape: &[usize]) -> Tensor {
        Tensor::new(data.to_vec(), shape).unwrap()
    }

    /// Naive sliding-window oracle for valid cross-correlation, one channel.
    fn naive_corr(x: &[f64], k: &[f64], stride: usize) -> Vec<f64> {
        let n = (x.len() - k.len()) / stride + 1;
        (0..n)
            .map(|l| k.iter().enumerate().map(|(j, kv)| kv * x[l * stride + j]).sum())
            .collect()
    }

    #[test]
    fn conv1d_examples() {
        let y = t(&[1.0, 2.0, 3.0], &[1, 1, 3]).conv1d(&t(&[1.0, 1.0], &[1, 1, 2]), 1).unwrap();
        assert_eq!(y.data(), naive_corr(&[1.0, 2.0, 3.0], &[1.0, 1.0], 1).as_slice());
        assert_eq!(y.data(), &[3.0, 5.0]);

        let y = t(&[5.0], &[1, 1, 1]).conv1d(&t(&[1.0], &[1, 1, 1]), 1).unwrap();
        assert_eq!(y.data(), &[5.0]);

        let y = t(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 4]).conv1d(&t(&[1.0, 1.0], &[1, 1, 2]), 2).unwrap();
        assert_eq!(y.data(), naive_corr(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0], 2).as_slice());
        assert_eq!(y.data(), &[3.0, 7.0]);
    }

    #[test]
    fn conv1d_rejects_long_kernel() {
        let x = t(&[1.0, 2.0], &[1, 1, 2]);
        let k = t(&[1.0, 1.0, 1.0], &[1, 1, 3]);
        assert!(matches!(x.conv1d(&k, 1), Err(crate::AdError::Contract { .. })));
        assert!(x.conv1d(&t(&[1.0], &[1, 1, 1]), 0).is_err());
    }

    #[test]
    fn transpose_examples() {
        // scatter-add oracle: out[l*s + j] += x[l] * k[j]
        let x = [1.0, 2.0];
        let k = [1.0, 1.0];
        let mut oracle = vec![0.0; 4];
        for (l, xv) in x.iter().enumerate() {
            for (j, kv) in k.iter().enumerate() {
                oracle[l * 2 + j] += xv * kv;
            }
        }
        let y = t(&x, &[1, 1, 2]).conv1d_transpose_raw(&t(&k, &[1, 1, 2]), 2).unwrap();
        assert_eq!(y.data(), oracle.as_slice());
        assert_eq!(y.data(), &[1.0, 1.0, 2.0, 2.0]);

        let y = t(&[7.0], &[1, 1, 1]).conv1d_transpose(&t(&[1.0], &[1, 1, 1]), 1).unwrap();
        assert_eq!(y.data(), &[7.0]);
        assert!(t(&[7.0], &[1, 1, 1]).conv1d_transpose(&t(&[1.0], &[1, 1, 1]), 0).is_err());
    }

    #[test]
    fn transpose_same_lengths() {
        let x = Tensor::zeros(&[2, 3, 16]).unwrap();
        let k = Tensor::zeros(&[3, 5, 25]).unwrap();
        for stride in [1, 2, 4] {
            let y = x.conv1d_transpose(&k, stride).unwrap();
            assert_eq!(y.shape(), &[2, 5, 16 * stride]);
        }
        // kernel shorter than stride pads instead of trimming
        let k = Tensor::zeros(&[3, 5, 3]).unwrap();
        assert_eq!(x.conv1d_transpose(&k, 5).unwrap().shape(), &[2, 5, 80]);
    }

    #[test]
    fn same_padding_lengths() {
        let x = Tensor::zeros(&[1, 1, 20480]).unwrap();
        let k = Tensor::zeros(&[4, 1, 25]).unwrap();
        assert_eq!(x.conv1d_same(&k, 4).unwrap().shape(), &[1, 4, 5120]);
    }

    #[test]
    fn transpose_same_trims_raw_symmetrically() {
        let x = t(&[1.0, -2.0, 3.0], &[1, 1, 3]);
        let k = t(&[0.5, 1.0, 2.0, -1.0, 0.25], &[1, 1, 5]);
        let raw = x.conv1d_transpose_raw(&k, 2).unwrap();
        let same = x.conv1d_transpose(&k, 2).unwrap();
        // raw length 9, target 6, surplus 3: trim 1 left, 2 right
        assert_eq!(raw.numel(), 9);
        assert_eq!(same.data(), &raw.data()[1..7]);
    }
}
