//! Time-axis ops: reflected shifts, framing / overlap-add, per-frame causal
//! filtering and damped-cosine resonator banks.

use std::f64::consts::PI;
use std::rc::Rc;

use crate::error::{contract_err, shape_err, Result};
use crate::op::Op;
use crate::tensor::Tensor;

/// Reflect an index into `[0, len)` (edge sample not repeated).
/// Requires `-len < i < 2·len − 1`.
#[inline]
pub fn reflect_index(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Framing layout: frame `t` covers signal samples
/// `t·hop − offset .. t·hop − offset + win`, zero outside `[0, signal_len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub hop: usize,
    pub offset: usize,
    pub win: usize,
    pub frames: usize,
    pub signal_len: usize,
}

impl FrameSpec {
    #[inline]
    fn signal_index(&self, t: usize, n: usize) -> Option<usize> {
        let i = (t * self.hop + n) as isize - self.offset as isize;
        (i >= 0 && (i as usize) < self.signal_len).then_some(i as usize)
    }
}

/// Damped-cosine impulse response `gain·r^n·cos(2π f n / fs)`,
/// `r = exp(−π·bandwidth/fs)`, `gain = 1 − r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    pub bandwidth: f64,
    pub taps: usize,
    pub sample_rate: f64,
}

impl ResonatorSpec {
    fn decay(&self) -> f64 {
        (-PI * self.bandwidth / self.sample_rate).exp()
    }

    fn envelope(&self) -> Vec<f64> {
        let r = self.decay();
        let gain = 1.0 - r;
        let mut env = Vec::with_capacity(self.taps);
        let mut acc = gain;
        for _ in 0..self.taps {
            env.push(acc);
            acc *= r;
        }
        env
    }
}

fn shift_forward(x: &Tensor, shifts: &[isize]) -> Vec<f64> {
    let (c, l) = (x.shape()[1], x.shape()[2]);
    let mut out = vec![0.0; x.numel()];
    for (bi, &s) in shifts.iter().enumerate() {
        for ci in 0..c {
            let base = (bi * c + ci) * l;
            let src = &x.data()[base..base + l];
            let dst = &mut out[base..base + l];
            for (li, d) in dst.iter_mut().enumerate() {
                *d = src[reflect_index(li as isize + s, l)];
            }
        }
    }
    out
}

fn shift_adjoint(g: &Tensor, shifts: &[isize]) -> Vec<f64> {
    let (c, l) = (g.shape()[1], g.shape()[2]);
    let mut out = vec![0.0; g.numel()];
    for (bi, &s) in shifts.iter().enumerate() {
        for ci in 0..c {
            let base = (bi * c + ci) * l;
            let src = &g.data()[base..base + l];
            let dst = &mut out[base..base + l];
            for (li, &v) in src.iter().enumerate() {
                dst[reflect_index(li as isize + s, l)] += v;
            }
        }
    }
    out
}

fn check_shifts(op: &'static str, x: &Tensor, shifts: &[isize]) -> Result<()> {
    x.expect_rank(op, 3)?;
    if shifts.len() != x.shape()[0] {
        return Err(shape_err(op, format!("{} shifts for batch {}", shifts.len(), x.shape()[0])));
    }
    let l = x.shape()[2] as isize;
    if let Some(s) = shifts.iter().find(|s| s.abs() >= l) {
        return Err(contract_err(op, format!("shift {s} needs length > {}", s.abs())));
    }
    Ok(())
}

impl Tensor {
    /// `y[b,c,l] = x[b,c,reflect(l + shifts[b])]` on a `[B×C×L]` tensor.
    pub fn phase_shift(&self, shifts: &[isize]) -> Result<Tensor> {
        check_shifts("phase_shift", self, shifts)?;
        let data = shift_forward(self, shifts);
        let shifts: Rc<[isize]> = shifts.into();
        Ok(Tensor::from_op(data, self.shape().to_vec(), Op::PhaseShift(shifts), vec![self.clone()]))
    }

    /// Adjoint (scatter-add) of [`Tensor::phase_shift`].
    pub fn phase_shift_adjoint(&self, shifts: &[isize]) -> Result<Tensor> {
        check_shifts("phase_shift_adjoint", self, shifts)?;
        let data = shift_adjoint(self, shifts);
        let shifts: Rc<[isize]> = shifts.into();
        Ok(Tensor::from_op(
            data,
            self.shape().to_vec(),
            Op::PhaseShiftAdjoint(shifts),
            vec![self.clone()],
        ))
    }

    /// `[B×signal_len] → [B×frames×win]`.
    pub fn frame(&self, spec: FrameSpec) -> Result<Tensor> {
        self.expect_rank("frame", 2)?;
        if self.shape()[1] != spec.signal_len {
            return Err(shape_err("frame", format!("length {} vs {}", self.shape()[1], spec.signal_len)));
        }
        let b = self.shape()[0];
        let mut out = vec![0.0; b * spec.frames * spec.win];
        for bi in 0..b {
            let src = &self.data()[bi * spec.signal_len..(bi + 1) * spec.signal_len];
            for t in 0..spec.frames {
                let dst = &mut out[(bi * spec.frames + t) * spec.win..(bi * spec.frames + t + 1) * spec.win];
                for (n, d) in dst.iter_mut().enumerate() {
                    if let Some(i) = spec.signal_index(t, n) {
                        *d = src[i];
                    }
                }
            }
        }
        Ok(Tensor::from_op(out, vec![b, spec.frames, spec.win], Op::Frame(spec), vec![self.clone()]))
    }

    /// `[B×frames×win] → [B×signal_len]`, summing overlapping frames.
    pub fn overlap_add(&self, spec: FrameSpec) -> Result<Tensor> {
        self.expect_rank("overlap_add", 3)?;
        if self.shape()[1..] != [spec.frames, spec.win] {
            return Err(shape_err(
                "overlap_add",
                format!("frames {:?} vs spec {}x{}", self.shape(), spec.frames, spec.win),
            ));
        }
        let b = self.shape()[0];
        let mut out = vec![0.0; b * spec.signal_len];
        for bi in 0..b {
            let dst = &mut out[bi * spec.signal_len..(bi + 1) * spec.signal_len];
            for t in 0..spec.frames {
                let src = &self.data()[(bi * spec.frames + t) * spec.win..(bi * spec.frames + t + 1) * spec.win];
                for (n, &v) in src.iter().enumerate() {
                    if let Some(i) = spec.signal_index(t, n) {
                        dst[i] += v;
                    }
                }
            }
        }
        Ok(Tensor::from_op(out, vec![b, spec.signal_len], Op::OverlapAdd(spec), vec![self.clone()]))
    }

    /// Truncated causal convolution along the last axis:
    /// `y[..., n] = Σ_{m ≤ n} s[..., m]·h[..., n − m]`. First-order only.
    pub fn frame_conv(&self, h: &Tensor) -> Result<Tensor> {
        self.expect_same_shape("frame_conv", h)?;
        let n = *self.shape().last().ok_or_else(|| shape_err("frame_conv", "rank-0 input"))?;
        let mut out = vec![0.0; self.numel()];
        for ((s, hv), y) in self
            .data()
            .chunks(n)
            .zip(h.data().chunks(n))
            .zip(out.chunks_mut(n))
        {
            for (m, &sv) in s.iter().enumerate() {
                if sv == 0.0 {
                    continue;
                }
                for (yv, &hh) in y[m..].iter_mut().zip(hv) {
                    *yv += sv * hh;
                }
            }
        }
        Ok(Tensor::from_op(out, self.shape().to_vec(), Op::FrameConv, vec![self.clone(), h.clone()]))
    }

    /// Impulse responses for a tensor of centre frequencies (Hz):
    /// `[...] → [..., taps]`. First-order only.
    pub fn resonator_bank(&self, spec: ResonatorSpec) -> Result<Tensor> {
        if spec.taps == 0 || spec.sample_rate <= 0.0 {
            return Err(contract_err("resonator_bank", "taps and sample rate must be positive"));
        }
        let env = spec.envelope();
        let mut out = Vec::with_capacity(self.numel() * spec.taps);
        for &f in self.data() {
            let w = 2.0 * PI * f / spec.sample_rate;
            // cos(n·w) via the Chebyshev recurrence
            let two_cos = 2.0 * w.cos();
            let (mut prev, mut cur) = (w.cos(), 1.0);
            for &e in &env {
                out.push(e * cur);
                let next = two_cos * cur - prev;
                prev = cur;
                cur = next;
            }
        }
        let mut shape = self.shape().to_vec();
        shape.push(spec.taps);
        Ok(Tensor::from_op(out, shape, Op::Resonator(spec), vec![self.clone()]))
    }
}

/// Gradients of [`Tensor::frame_conv`] as plain vectors.
pub(crate) fn frame_conv_vjp(s: &Tensor, h: &Tensor, g: &Tensor) -> (Vec<f64>, Vec<f64>) {
    let n = *s.shape().last().unwrap();
    let mut gs = vec![0.0; s.numel()];
    let mut gh = vec![0.0; h.numel()];
    for (((sv, hv), gv), (gsv, ghv)) in s
        .data()
        .chunks(n)
        .zip(h.data().chunks(n))
        .zip(g.data().chunks(n))
        .zip(gs.chunks_mut(n).zip(gh.chunks_mut(n)))
    {
        for m in 0..n {
            // gs[m] = Σ_{k} g[m+k]·h[k];  gh[m] = Σ_k g[m+k]·s[k]
            let tail = &gv[m..];
            gsv[m] = tail.iter().zip(hv).map(|(a, b)| a * b).sum();
            ghv[m] = tail.iter().zip(sv).map(|(a, b)| a * b).sum();
        }
    }
    (gs, gh)
}

/// Gradient of [`Tensor::resonator_bank`] w.r.t. its frequencies.
pub(crate) fn resonator_vjp(freqs: &Tensor, g: &Tensor, spec: &ResonatorSpec) -> Vec<f64> {
    let env = spec.envelope();
    let taps = spec.taps;
    let dw = 2.0 * PI / spec.sample_rate;
    freqs
        .data()
        .iter()
        .zip(g.data().chunks(taps))
        .map(|(&f, gv)| {
            let w = dw * f;
            // d/df [e_n cos(n w)] = −e_n · n · dw · sin(n w); sin via recurrence
            let two_cos = 2.0 * w.cos();
            let (mut prev, mut cur) = (-w.sin(), 0.0);
            let mut acc = 0.0;
            for (n, (&e, &gn)) in env.iter().zip(gv).enumerate() {
                acc -= gn * e * n as f64 * cur;
                let next = two_cos * cur - prev;
                prev = cur;
                cur = next;
            }
            acc * dw
        })
        .collect()
}
