//! Seeded finite-difference suites over the op set, for the command line
//! and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backward::grad_as_node;
use crate::error::Result;
use crate::gradcheck::{check_all_coordinates, GradcheckReport, FD_STEP};
use crate::ops::signal::{FrameSpec, ResonatorSpec};
use crate::tensor::Tensor;

/// Tolerance for single ops.
pub const PRIMITIVE_TOL: f64 = 1e-4;
/// Tolerance for composites and second-order checks.
pub const COMPOSITE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub report: GradcheckReport,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.report.max_rel_err < self.tolerance
    }
}

type Instance = fn(&mut ChaCha8Rng) -> Result<GradcheckReport>;

const SUITES: [(&str, f64, Instance); 11] = [
    ("dense", PRIMITIVE_TOL, dense),
    ("matmul_transpose", PRIMITIVE_TOL, matmul_transpose),
    ("conv1d", PRIMITIVE_TOL, conv1d),
    ("conv1d_same", PRIMITIVE_TOL, conv1d_same),
    ("conv1d_transpose", PRIMITIVE_TOL, conv1d_transpose),
    ("elementwise", PRIMITIVE_TOL, elementwise),
    ("reductions", PRIMITIVE_TOL, reductions),
    ("phase_shift", PRIMITIVE_TOL, phase_shift),
    ("frame_overlap_add", PRIMITIVE_TOL, frame_ops),
    ("resonator_bank", PRIMITIVE_TOL, resonator_bank),
    ("second_order", COMPOSITE_TOL, second_order),
];

/// Run `trials` random instances of every op suite. Instance `i` of each
/// suite is drawn from a ChaCha8 stream seeded with `seed + i`.
pub fn op_suites(trials: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    SUITES
        .iter()
        .map(|&(name, tolerance, instance)| {
            let mut report = GradcheckReport::empty();
            for i in 0..trials as u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                report = report.merge(instance(&mut rng)?);
            }
            Ok(SuiteReport { name, report, tolerance })
        })
        .collect()
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    let n = shape.iter().product();
    Tensor::new((0..n).map(|_| rng.gen_range(lo..hi)).collect(), shape)
}

fn weighted(y: &Tensor, w: &Tensor) -> Result<Tensor> {
    Ok(y.mul(w)?.sum())
}

fn dense(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (b, i, o) = (rng.gen_range(1..4), rng.gen_range(1..5), rng.gen_range(1..4));
    let x = rand_tensor(rng, &[b, i], -1.0, 1.0)?;
    let w = rand_tensor(rng, &[i, o], -1.0, 1.0)?;
    let bias = rand_tensor(rng, &[o], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[b, o], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].dense(&t[1], &t[2])?, &r), &[x, w, bias], FD_STEP)
}

fn matmul_transpose(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (m, k, n) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4));
    let a = rand_tensor(rng, &[m, k], -1.0, 1.0)?;
    let b = rand_tensor(rng, &[k, n], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[n, m], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].matmul(&t[1])?.transpose()?, &r), &[a, b], FD_STEP)
}

fn conv1d(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (b, c, f) = (rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..3));
    let k = rng.gen_range(1..5);
    let l = rng.gen_range(k..k + 8);
    let stride = rng.gen_range(1..4);
    let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0)?;
    let kern = rand_tensor(rng, &[f, c, k], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[b, f, (l - k) / stride + 1], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].conv1d(&t[1], stride)?, &r), &[x, kern], FD_STEP)
}

fn conv1d_same(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (c, f) = (rng.gen_range(1..3), rng.gen_range(1..3));
    let k = rng.gen_range(1..7);
    let l = rng.gen_range(4..12);
    let stride = rng.gen_range(1..4);
    let x = rand_tensor(rng, &[2, c, l], -1.0, 1.0)?;
    let kern = rand_tensor(rng, &[f, c, k], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[2, f, l.div_ceil(stride)], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].conv1d_same(&t[1], stride)?, &r), &[x, kern], FD_STEP)
}

fn conv1d_transpose(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (b, c, f) = (rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..3));
    let k = rng.gen_range(1..7);
    let l = rng.gen_range(1..6);
    let stride = rng.gen_range(1..4);
    let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0)?;
    let kern = rand_tensor(rng, &[c, f, k], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[b, f, stride * l], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].conv1d_transpose(&t[1], stride)?, &r), &[x, kern], FD_STEP)
}

fn elementwise(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let n = rng.gen_range(1..6);
    let a = rand_tensor(rng, &[2, n], -2.0, 2.0)?;
    let b = rand_tensor(rng, &[2, n], -2.0, 2.0)?;
    let r = rand_tensor(rng, &[2, n], -1.0, 1.0)?;
    let alpha = rng.gen_range(0.0..1.0);
    let rep = check_all_coordinates(
        |t| {
            let y = t[0].mul(&t[1])?.add(&t[0].tanh())?.sub(&t[1].sigmoid().scale(1.5))?;
            weighted(&y.leaky_relu(alpha).add_scalar(0.3).neg().square(), &r)
        },
        &[a, b],
        FD_STEP,
    )?;
    let pos = rand_tensor(rng, &[2, n], 0.5, 3.0)?;
    let rep2 = check_all_coordinates(
        |t| weighted(&t[0].sqrt()?.add(&t[0].safe_recip())?.clamp(-10.0, 10.0).relu(), &r),
        &[pos],
        FD_STEP,
    )?;
    Ok(rep.merge(rep2))
}

fn reductions(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (b, c, l) = (rng.gen_range(1..3), rng.gen_range(2..4), rng.gen_range(2..5));
    let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0)?;
    let bias = rand_tensor(rng, &[c], -1.0, 1.0)?;
    let r_item = rand_tensor(rng, &[b], -1.0, 1.0)?;
    let r_sel = rand_tensor(rng, &[b, l, 3], -1.0, 1.0)?;
    let r_full = rand_tensor(rng, &[b, c, l], -1.0, 1.0)?;
    let ch = rng.gen_range(0..c);
    check_all_coordinates(
        |t| {
            let y = t[0].bias_add(&t[1])?;
            let per_item = y.square().sum_per_item()?.mul(&r_item)?.sum();
            let sel = y.select_channel(ch)?.expand_last(3)?.mul(&r_sel)?;
            let back = sel.sum_last()?.embed_channel(ch, c)?.reshape(&[b, c * l])?;
            let t2 = back.transpose()?.sum();
            let chan = y.channel_sum()?.square().sum();
            let bc = y.channel_sum()?.channel_broadcast(&[b, c, l])?.mul(&r_full)?.sum();
            let bi = y.sum_per_item()?.broadcast_per_item(&[b, c, l])?.mul(&r_full)?.sum();
            let bs = y.mean().broadcast_scalar(&[b, c, l])?.mul(&r_full)?.sum();
            Ok(per_item.add(&t2)?.add(&chan)?.add(&bc)?.add(&bi)?.add(&bs)?)
        },
        &[x, bias],
        FD_STEP,
    )
}

fn phase_shift(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let b = rng.gen_range(1..3);
    let l = rng.gen_range(3..8);
    let x = rand_tensor(rng, &[b, 2, l], -1.0, 1.0)?;
    let shifts: Vec<isize> = (0..b).map(|_| rng.gen_range(-(l as isize - 1)..l as isize)).collect();
    let r = rand_tensor(rng, &[b, 2, l], -1.0, 1.0)?;
    check_all_coordinates(
        |t| weighted(&t[0].phase_shift(&shifts)?.phase_shift_adjoint(&shifts)?.tanh(), &r),
        &[x],
        FD_STEP,
    )
}

fn frame_ops(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let b = rng.gen_range(1..3);
    let spec = FrameSpec { hop: 2, offset: 1, win: 4, frames: 4, signal_len: 8 };
    let sig = rand_tensor(rng, &[b, 8], -1.0, 1.0)?;
    let h = rand_tensor(rng, &[b, 4, 4], -1.0, 1.0)?;
    let r = rand_tensor(rng, &[b, 8], -1.0, 1.0)?;
    check_all_coordinates(
        |t| weighted(&t[0].frame(spec)?.frame_conv(&t[1])?.overlap_add(spec)?, &r),
        &[sig, h],
        FD_STEP,
    )
}

fn resonator_bank(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let b = rng.gen_range(1..3);
    let rs = ResonatorSpec { bandwidth: rng.gen_range(50.0..200.0), taps: 16, sample_rate: 16000.0 };
    let freqs = rand_tensor(rng, &[b, 3], 200.0, 3000.0)?;
    let r = rand_tensor(rng, &[b, 3, 16], -1.0, 1.0)?;
    check_all_coordinates(|t| weighted(&t[0].resonator_bank(rs)?, &r), &[freqs], FD_STEP)
}

/// Gradient of a nonlinear function of `∇ₓ net(x)` w.r.t. the weights of a
/// random two-layer net.
fn second_order(rng: &mut ChaCha8Rng) -> Result<GradcheckReport> {
    let (i, h) = (rng.gen_range(2..5), rng.gen_range(2..5));
    let x = rand_tensor(rng, &[2, i], -1.0, 1.0)?;
    let w1 = rand_tensor(rng, &[i, h], -1.0, 1.0)?;
    let b1 = rand_tensor(rng, &[h], -1.0, 1.0)?;
    let w2 = rand_tensor(rng, &[h, 1], -1.0, 1.0)?;
    let v = rand_tensor(rng, &[2, i], -1.0, 1.0)?;
    let leaky = rng.gen_bool(0.5);
    check_all_coordinates(
        |t| {
            let xl = Tensor::param(x.to_vec(), x.shape())?;
            let hid = xl.dense(&t[0], &t[1])?;
            let hid = if leaky { hid.leaky_relu(0.2) } else { hid.tanh() };
            let out = hid.matmul(&t[2])?.sum();
            let gx = grad_as_node(&out, &xl)?;
            gx.mul(&v)?.sum().add(&gx.square().sum().sqrt()?)
        },
        &[w1, b1, w2],
        FD_STEP,
    )
}
