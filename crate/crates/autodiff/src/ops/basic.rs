//! Elementwise, reduction, reshaping and dense ops.

use crate::error::{contract_err, shape_err, Result};
use crate::op::Op;
use crate::tensor::{numel_of, Tensor};

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
}

fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Vec<f64> {
    a.data().iter().map(|&x| f(x)).collect()
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.expect_same_shape("add", other)?;
        let data = zip_map(self, other, |x, y| x + y);
        Ok(Tensor::from_op(data, self.shape().to_vec(), Op::Add, vec![self.clone(), other.clone()]))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.expect_same_shape("sub", other)?;
        let data = zip_map(self, other, |x, y| x - y);
        Ok(Tensor::from_op(data, self.shape().to_vec(), Op::Sub, vec![self.clone(), other.clone()]))
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.expect_same_shape("mul", other)?;
        let data = zip_map(self, other, |x, y| x * y);
        Ok(Tensor::from_op(data, self.shape().to_vec(), Op::Mul, vec![self.clone(), other.clone()]))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor::from_op(map(self, |x| c * x), self.shape().to_vec(), Op::Scale(c), vec![self.clone()])
    }

    pub fn neg(&self) -> Tensor {
        self.scale(-1.0)
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        Tensor::from_op(map(self, |x| x + c), self.shape().to_vec(), Op::AddScalar, vec![self.clone()])
    }

    pub fn square(&self) -> Tensor {
        self.mul(self).expect("same tensor has matching shape")
    }

    /// `[M×K] · [K×N] → [M×N]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        self.expect_rank("matmul", 2)?;
        other.expect_rank("matmul", 2)?;
        let (m, k) = (self.shape()[0], self.shape()[1]);
        let (k2, n) = (other.shape()[0], other.shape()[1]);
        if k != k2 {
            return Err(shape_err("matmul", format!("inner dims {k} vs {k2}")));
        }
        let mut out = vec![0.0; m * n];
        // SAFETY: slice lengths match the dimensions and strides passed.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.data().as_ptr(),
                k as isize,
                1,
                other.data().as_ptr(),
                n as isize,
                1,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Ok(Tensor::from_op(out, vec![m, n], Op::MatMul, vec![self.clone(), other.clone()]))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        self.expect_rank("transpose", 2)?;
        let (r, c) = (self.shape()[0], self.shape()[1]);
        let src = self.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        Ok(Tensor::from_op(out, vec![c, r], Op::Transpose, vec![self.clone()]))
    }

    /// Adds `b[C]` along axis 1 of a `[B×C×...]` tensor. The only broadcast
    /// the engine supports.
    pub fn bias_add(&self, b: &Tensor) -> Result<Tensor> {
        if self.shape().len() < 2 {
            return Err(shape_err("bias_add", format!("input rank < 2: {:?}", self.shape())));
        }
        let c = self.shape()[1];
        if b.shape() != [c] {
            return Err(shape_err("bias_add", format!("bias {:?} for {c} channels", b.shape())));
        }
        let inner: usize = self.shape()[2..].iter().product();
        let mut out = self.to_vec();
        for (chunk_idx, chunk) in out.chunks_mut(inner).enumerate() {
            let bias = b.data()[chunk_idx % c];
            chunk.iter_mut().for_each(|v| *v += bias);
        }
        Ok(Tensor::from_op(out, self.shape().to_vec(), Op::BiasAdd, vec![self.clone(), b.clone()]))
    }

    /// Sums everything except axis 1: `[B×C×...] → [C]`.
    pub fn channel_sum(&self) -> Result<Tensor> {
        if self.shape().len() < 2 {
            return Err(shape_err("channel_sum", format!("input rank < 2: {:?}", self.shape())));
        }
        let c = self.shape()[1];
        let inner: usize = self.shape()[2..].iter().product();
        let mut out = vec![0.0; c];
        for (chunk_idx, chunk) in self.data().chunks(inner).enumerate() {
            out[chunk_idx % c] += chunk.iter().sum::<f64>();
        }
        Ok(Tensor::from_op(out, vec![c], Op::ChannelSum, vec![self.clone()]))
    }

    /// Adjoint of [`Tensor::channel_sum`]: `[C] → shape` with axis 1 = C.
    pub fn channel_broadcast(&self, shape: &[usize]) -> Result<Tensor> {
        if shape.len() < 2 || self.shape() != [shape[1]] {
            return Err(shape_err(
                "channel_broadcast",
                format!("{:?} into {shape:?}", self.shape()),
            ));
        }
        let c = shape[1];
        let inner: usize = shape[2..].iter().product();
        let mut out = vec![0.0; numel_of(shape)];
        for (chunk_idx, chunk) in out.chunks_mut(inner).enumerate() {
            let v = self.data()[chunk_idx % c];
            chunk.iter_mut().for_each(|x| *x = v);
        }
        Ok(Tensor::from_op(out, shape.to_vec(), Op::ChannelBroadcast, vec![self.clone()]))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel_of(shape) != self.numel() || shape.iter().any(|&d| d == 0) {
            return Err(shape_err("reshape", format!("{:?} into {shape:?}", self.shape())));
        }
        Ok(Tensor::from_op(self.to_vec(), shape.to_vec(), Op::Reshape, vec![self.clone()]))
    }

    pub fn tanh(&self) -> Tensor {
        Tensor::from_op(map(self, f64::tanh), self.shape().to_vec(), Op::Tanh, vec![self.clone()])
    }

    pub fn sigmoid(&self) -> Tensor {
        let data = map(self, |x| 1.0 / (1.0 + (-x).exp()));
        Tensor::from_op(data, self.shape().to_vec(), Op::Sigmoid, vec![self.clone()])
    }

    /// `max(x, alpha·x)` for `alpha ≤ 1`. The slope used at exactly zero is
    /// `alpha`.
    pub fn leaky_relu(&self, alpha: f64) -> Tensor {
        let data = map(self, |x| if x > 0.0 { x } else { alpha * x });
        Tensor::from_op(data, self.shape().to_vec(), Op::LeakyRelu(alpha), vec![self.clone()])
    }

    pub fn relu(&self) -> Tensor {
        self.leaky_relu(0.0)
    }

    /// Clamp into `[lo, hi]`; gradient is zero strictly outside the interval.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor {
        let data = map(self, |x| x.clamp(lo, hi));
        Tensor::from_op(data, self.shape().to_vec(), Op::Clamp(lo, hi), vec![self.clone()])
    }

    /// `1/x`, with 0 mapped to 0.
    pub fn safe_recip(&self) -> Tensor {
        let data = map(self, |x| if x == 0.0 { 0.0 } else { 1.0 / x });
        Tensor::from_op(data, self.shape().to_vec(), Op::SafeRecip, vec![self.clone()])
    }

    /// Square root of a nonnegative tensor. The derivative at 0 is taken as 0.
    pub fn sqrt(&self) -> Result<Tensor> {
        if let Some(bad) = self.data().iter().find(|&&x| x < 0.0 || x.is_nan()) {
            return Err(contract_err("sqrt", format!("negative or NaN input {bad}")));
        }
        Ok(Tensor::from_op(map(self, f64::sqrt), self.shape().to_vec(), Op::Sqrt, vec![self.clone()]))
    }

    /// Sum of all elements, as a rank-0 tensor.
    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(vec![s], Vec::new(), Op::Sum, vec![self.clone()])
    }

    pub fn mean(&self) -> Tensor {
        self.sum().scale(1.0 / self.numel() as f64)
    }

    /// Broadcast a one-element tensor to `shape`.
    pub fn broadcast_scalar(&self, shape: &[usize]) -> Result<Tensor> {
        if self.numel() != 1 {
            return Err(shape_err("broadcast_scalar", format!("input {:?}", self.shape())));
        }
        let out = vec![self.item(); numel_of(shape)];
        Ok(Tensor::from_op(out, shape.to_vec(), Op::BroadcastScalar, vec![self.clone()]))
    }

    /// `[B×...] → [B]`.
    pub fn sum_per_item(&self) -> Result<Tensor> {
        if self.shape().is_empty() {
            return Err(shape_err("sum_per_item", "rank-0 input"));
        }
        let b = self.shape()[0];
        let inner = self.numel() / b;
        let out = self.data().chunks(inner).map(|c| c.iter().sum()).collect();
        Ok(Tensor::from_op(out, vec![b], Op::SumPerItem, vec![self.clone()]))
    }

    /// `[B] → shape` with `shape[0] == B`.
    pub fn broadcast_per_item(&self, shape: &[usize]) -> Result<Tensor> {
        if shape.is_empty() || self.shape() != [shape[0]] {
            return Err(shape_err(
                "broadcast_per_item",
                format!("{:?} into {shape:?}", self.shape()),
            ));
        }
        let inner = numel_of(shape) / shape[0];
        let out = self
            .data()
            .iter()
            .flat_map(|&v| std::iter::repeat(v).take(inner))
            .collect();
        Ok(Tensor::from_op(out, shape.to_vec(), Op::BroadcastPerItem, vec![self.clone()]))
    }

    /// Repeat each element `n` times along a new trailing axis.
    pub fn expand_last(&self, n: usize) -> Result<Tensor> {
        if n == 0 {
            return Err(contract_err("expand_last", "n must be positive"));
        }
        let out = self
            .data()
            .iter()
            .flat_map(|&v| std::iter::repeat(v).take(n))
            .collect();
        let mut shape = self.shape().to_vec();
        shape.push(n);
        Ok(Tensor::from_op(out, shape, Op::ExpandLast, vec![self.clone()]))
    }

    /// Sum over the trailing axis.
    pub fn sum_last(&self) -> Result<Tensor> {
        if self.shape().len() < 2 {
            return Err(shape_err("sum_last", format!("input rank < 2: {:?}", self.shape())));
        }
        let n = *self.shape().last().unwrap();
        let out = self.data().chunks(n).map(|c| c.iter().sum()).collect();
        let shape = self.shape()[..self.shape().len() - 1].to_vec();
        Ok(Tensor::from_op(out, shape, Op::SumLast, vec![self.clone()]))
    }

    /// `[B×C×L] → [B×L]` picking channel `c`.
    pub fn select_channel(&self, c: usize) -> Result<Tensor> {
        self.expect_rank("select_channel", 3)?;
        let (b, ch, l) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        if c >= ch {
            return Err(contract_err("select_channel", format!("channel {c} of {ch}")));
        }
        let mut out = Vec::with_capacity(b * l);
        for bi in 0..b {
            let start = (bi * ch + c) * l;
            out.extend_from_slice(&self.data()[start..start + l]);
        }
        Ok(Tensor::from_op(out, vec![b, l], Op::SelectChannel(c), vec![self.clone()]))
    }

    /// `[B×L] → [B×channels×L]`, zeros everywhere except channel `c`.
    pub fn embed_channel(&self, c: usize, channels: usize) -> Result<Tensor> {
        self.expect_rank("embed_channel", 2)?;
        if c >= channels {
            return Err(contract_err("embed_channel", format!("channel {c} of {channels}")));
        }
        let (b, l) = (self.shape()[0], self.shape()[1]);
        let mut out = vec![0.0; b * channels * l];
        for bi in 0..b {
            let start = (bi * channels + c) * l;
            out[start..start + l].copy_from_slice(&self.data()[bi * l..(bi + 1) * l]);
        }
        Ok(Tensor::from_op(out, vec![b, channels, l], Op::EmbedChannel(c), vec![self.clone()]))
    }

    /// `x[B×I] · w[I×O] + b[O]`.
    pub fn dense(&self, w: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.matmul(w)?.bias_add(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(data: &[f64], shape: &[usize]) -> Tensor {
        Tensor::new(data.to_vec(), shape).unwrap()
    }

    #[test]
    fn dense_identity_and_dot() {
        let x = t(&[1.0, 2.0], &[1, 2]);
        let eye = t(&[1.0, 0.0, 0.0, 1.0], &[2, 2]);
        let y = x.dense(&eye, &t(&[0.0, 0.0], &[2])).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);

        let w = t(&[1.0, 1.0], &[2, 1]);
        let y = x.dense(&w, &t(&[3.0], &[1])).unwrap();
        assert_eq!(y.shape(), &[1, 1]);
        assert_eq!(y.data(), &[6.0]);
    }

    #[test]
    fn dense_rejects_inner_mismatch() {
        let x = t(&[1.0, 2.0, 3.0], &[1, 3]);
        let w = t(&[1.0, 1.0], &[2, 1]);
        assert!(x.dense(&w, &t(&[0.0], &[1])).is_err());
    }

    #[test]
    fn leaky_relu_values() {
        let x = t(&[1.0, -1.0], &[2]);
        assert_eq!(x.leaky_relu(0.2).data(), &[1.0, -0.2]);
        assert_eq!(x.leaky_relu(1.0).data(), x.data());
        let pos = t(&[0.0, 3.0], &[2]);
        assert_eq!(pos.leaky_relu(0.0).data(), pos.data());
    }

    #[test]
    fn tanh_range() {
        let x = t(&[0.0, 1e6, -1e6], &[3]);
        let y = x.tanh();
        assert_eq!(y.data()[0], 0.0);
        assert!(y.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn bias_add_and_channel_sum_are_adjoint_shaped() {
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &[2, 2, 2]);
        let b = t(&[10.0, 20.0], &[2]);
        let y = x.bias_add(&b).unwrap();
        assert_eq!(y.data(), &[11.0, 12.0, 23.0, 24.0, 15.0, 16.0, 27.0, 28.0]);
        assert_eq!(x.channel_sum().unwrap().data(), &[1.0 + 2.0 + 5.0 + 6.0, 3.0 + 4.0 + 7.0 + 8.0]);
    }

    #[test]
    fn select_and_embed() {
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[1, 3, 2]);
        let s = x.select_channel(1).unwrap();
        assert_eq!(s.data(), &[3.0, 4.0]);
        let e = s.embed_channel(2, 3).unwrap();
        assert_eq!(e.data(), &[0.0, 0.0, 0.0, 0.0, 3.0, 4.0]);
        assert!(x.select_channel(3).is_err());
    }

    #[test]
    fn sqrt_rejects_negative() {
        assert!(t(&[-1.0], &[1]).sqrt().is_err());
    }
}
