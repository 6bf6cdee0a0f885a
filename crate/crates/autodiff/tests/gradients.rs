//! Finite-difference and adjoint checks for every op.

use artgan_autodiff::gradcheck::{check_all_coordinates, check_directions, GradcheckReport, FD_STEP};
use artgan_autodiff::{backward, grad_as_node, ConvGeometry, FrameSpec, ResonatorSpec, Result, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 100;
const PRIMITIVE_TOL: f64 = 1e-4;
const SECOND_ORDER_TOL: f64 = 1e-3;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new((0..n).map(|_| rng.gen_range(lo..hi)).collect(), shape).unwrap()
}

/// Contract an op output against fixed random weights so every output
/// coordinate matters.
fn weighted(y: &Tensor, w: &Tensor) -> Result<Tensor> {
    Ok(y.mul(w)?.sum())
}

fn suite(name: &str, mut instance: impl FnMut(&mut ChaCha8Rng) -> GradcheckReport) {
    let mut total = GradcheckReport::empty();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        total = total.merge(instance(&mut rng));
    }
    assert!(
        total.max_rel_err < PRIMITIVE_TOL,
        "{name}: max rel err {} over {} checks",
        total.max_rel_err,
        total.checks
    );
}

#[test]
fn dense_gradients() {
    suite("dense", |rng| {
        let (b, i, o) = (rng.gen_range(1..4), rng.gen_range(1..5), rng.gen_range(1..4));
        let x = rand_tensor(rng, &[b, i], -1.0, 1.0);
        let w = rand_tensor(rng, &[i, o], -1.0, 1.0);
        let bias = rand_tensor(rng, &[o], -1.0, 1.0);
        let r = rand_tensor(rng, &[b, o], -1.0, 1.0);
        check_all_coordinates(|t| weighted(&t[0].dense(&t[1], &t[2])?, &r), &[x, w, bias], FD_STEP).unwrap()
    });
}

#[test]
fn dense_sum_gradient_wrt_weight() {
    let x = Tensor::new(vec![1.0, 2.0], &[1, 2]).unwrap();
    let w = Tensor::param(vec![0.3, -0.1], &[2, 1]).unwrap();
    let b = Tensor::new(vec![0.0], &[1]).unwrap();
    let g = backward(&x.dense(&w, &b).unwrap().sum()).unwrap();
    assert_eq!(g.get(&w).unwrap().data(), &[1.0, 2.0]);
}

#[test]
fn conv1d_gradients() {
    suite("conv1d", |rng| {
        let (b, c, f) = (rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..3));
        let k = rng.gen_range(1..5);
        let l = rng.gen_range(k..k + 8);
        let stride = rng.gen_range(1..4);
        let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0);
        let kern = rand_tensor(rng, &[f, c, k], -1.0, 1.0);
        let lout = (l - k) / stride + 1;
        let r = rand_tensor(rng, &[b, f, lout], -1.0, 1.0);
        check_all_coordinates(|t| weighted(&t[0].conv1d(&t[1], stride)?, &r), &[x, kern], FD_STEP).unwrap()
    });
}

#[test]
fn conv1d_same_gradients() {
    suite("conv1d_same", |rng| {
        let (c, f) = (rng.gen_range(1..3), rng.gen_range(1..3));
        let k = rng.gen_range(1..7);
        let l = rng.gen_range(4..12);
        let stride = rng.gen_range(1..4);
        let x = rand_tensor(rng, &[2, c, l], -1.0, 1.0);
        let kern = rand_tensor(rng, &[f, c, k], -1.0, 1.0);
        let r = rand_tensor(rng, &[2, f, l.div_ceil(stride)], -1.0, 1.0);
        check_all_coordinates(|t| weighted(&t[0].conv1d_same(&t[1], stride)?, &r), &[x, kern], FD_STEP).unwrap()
    });
}

#[test]
fn conv1d_transpose_gradients() {
    suite("conv1d_transpose", |rng| {
        let (b, c, f) = (rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..3));
        let k = rng.gen_range(1..7);
        let l = rng.gen_range(1..6);
        let stride = rng.gen_range(1..4);
        let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0);
        let kern = rand_tensor(rng, &[c, f, k], -1.0, 1.0);
        let r = rand_tensor(rng, &[b, f, stride * l], -1.0, 1.0);
        check_all_coordinates(|t| weighted(&t[0].conv1d_transpose(&t[1], stride)?, &r), &[x, kern], FD_STEP)
            .unwrap()
    });
}

#[test]
fn conv1d_transpose_input_gradient_is_kernel_sum_correlation() {
    // d/dx sum(conv_transpose(x, k)) = all-ones correlated with k = Σk per
    // input sample (raw geometry, every tap lands in the output).
    let x = Tensor::param(vec![0.2, -0.4, 0.9], &[1, 1, 3]).unwrap();
    let k = Tensor::new(vec![0.5, 1.5, -1.0, 2.0], &[1, 1, 4]).unwrap();
    let g = backward(&x.conv1d_transpose_raw(&k, 2).unwrap().sum()).unwrap();
    for v in g.get(&x).unwrap().data() {
        assert!((v - 3.0).abs() < 1e-12);
    }
}

#[test]
fn elementwise_gradients() {
    suite("elementwise", |rng| {
        let n = rng.gen_range(1..6);
        let a = rand_tensor(rng, &[2, n], -2.0, 2.0);
        let b = rand_tensor(rng, &[2, n], -2.0, 2.0);
        let r = rand_tensor(rng, &[2, n], -1.0, 1.0);
        let alpha = rng.gen_range(0.0..1.0);
        let mut rep = check_all_coordinates(
            |t| {
                let y = t[0].mul(&t[1])?.add(&t[0].tanh())?.sub(&t[1].sigmoid().scale(1.5))?;
                weighted(&y.leaky_relu(alpha).add_scalar(0.3), &r)
            },
            &[a.clone(), b.clone()],
            FD_STEP,
        )
        .unwrap();
        // sqrt / safe_recip away from zero, clamp with a wide interval
        let pos = rand_tensor(rng, &[2, n], 0.5, 3.0);
        rep = rep.merge(
            check_all_coordinates(
                |t| weighted(&t[0].sqrt()?.add(&t[0].safe_recip())?.clamp(-10.0, 10.0), &r),
                &[pos],
                FD_STEP,
            )
            .unwrap(),
        );
        rep
    });
}

#[test]
fn reduction_and_layout_gradients() {
    suite("reductions", |rng| {
        let (b, c, l) = (rng.gen_range(1..3), rng.gen_range(2..4), rng.gen_range(2..5));
        let x = rand_tensor(rng, &[b, c, l], -1.0, 1.0);
        let bias = rand_tensor(rng, &[c], -1.0, 1.0);
        let r_item = rand_tensor(rng, &[b], -1.0, 1.0);
        let r_sel = rand_tensor(rng, &[b, l, 3], -1.0, 1.0);
        let ch = rng.gen_range(0..c);
        check_all_coordinates(
            |t| {
                let y = t[0].bias_add(&t[1])?;
                let per_item = y.square().sum_per_item()?.mul(&r_item)?.sum();
                let sel = y.select_channel(ch)?.expand_last(3)?.mul(&r_sel)?;
                let back = sel.sum_last()?.embed_channel(ch, c)?.reshape(&[b, c * l])?;
                let t2 = back.transpose()?.sum();
                let chan = y.channel_sum()?.square().sum();
                per_item.add(&t2)?.add(&chan)?.add(&y.mean())
            },
            &[x, bias],
            FD_STEP,
        )
        .unwrap()
    });
}

#[test]
fn signal_op_gradients() {
    suite("signal", |rng| {
        let b = rng.gen_range(1..3);
        let l = rng.gen_range(3..8);
        let x = rand_tensor(rng, &[b, 2, l], -1.0, 1.0);
        let shifts: Vec<isize> = (0..b).map(|_| rng.gen_range(-(l as isize - 1)..l as isize)).collect();
        let r = rand_tensor(rng, &[b, 2, l], -1.0, 1.0);
        let mut rep = check_all_coordinates(
            |t| weighted(&t[0].phase_shift(&shifts)?.phase_shift_adjoint(&shifts)?.tanh(), &r),
            &[x],
            FD_STEP,
        )
        .unwrap();

        let spec = FrameSpec { hop: 2, offset: 1, win: 4, frames: 4, signal_len: 8 };
        let sig = rand_tensor(rng, &[b, 8], -1.0, 1.0);
        let h = rand_tensor(rng, &[b, 4, 4], -1.0, 1.0);
        let r2 = rand_tensor(rng, &[b, 8], -1.0, 1.0);
        rep = rep.merge(
            check_all_coordinates(
                |t| weighted(&t[0].frame(spec)?.frame_conv(&t[1])?.overlap_add(spec)?, &r2),
                &[sig, h],
                FD_STEP,
            )
            .unwrap(),
        );

        let rs = ResonatorSpec { bandwidth: rng.gen_range(50.0..200.0), taps: 16, sample_rate: 16000.0 };
        let freqs = rand_tensor(rng, &[b, 3], 200.0, 3000.0);
        let r3 = rand_tensor(rng, &[b, 3, 16], -1.0, 1.0);
        rep.merge(check_all_coordinates(|t| weighted(&t[0].resonator_bank(rs)?, &r3), &[freqs], FD_STEP).unwrap())
    });
}

#[test]
fn conv_transpose_is_adjoint_of_conv() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (b, c, f) = (rng.gen_range(1..3), rng.gen_range(1..4), rng.gen_range(1..4));
        let k = rng.gen_range(1..6);
        let stride = rng.gen_range(1..4);
        let lout = rng.gen_range(1..6);
        let l = (lout - 1) * stride + k;
        let x = rand_tensor(&mut rng, &[b, c, l], -1.0, 1.0);
        let kern = rand_tensor(&mut rng, &[f, c, k], -1.0, 1.0);
        let y = rand_tensor(&mut rng, &[b, f, lout], -1.0, 1.0);
        let lhs = x.conv1d(&kern, stride).unwrap().mul(&y).unwrap().sum().item();
        let rhs = x.mul(&y.conv1d_transpose_raw(&kern, stride).unwrap()).unwrap().sum().item();
        assert!((lhs - rhs).abs() < 1e-9, "seed {seed}: {lhs} vs {rhs}");

        // same holds for the padded "same" geometries
        let g = ConvGeometry::transpose_same(lout, k, stride).unwrap();
        let x = rand_tensor(&mut rng, &[b, c, g.signal_len], -1.0, 1.0);
        let lhs = x.conv_corr(&kern, g).unwrap().mul(&y).unwrap().sum().item();
        let rhs = x.mul(&y.conv_scatter(&kern, g).unwrap()).unwrap().sum().item();
        assert!((lhs - rhs).abs() < 1e-9, "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn fan_out_equals_sum_of_single_consumers() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x0 = rand_tensor(&mut rng, &[2, 3], -1.0, 1.0);
    let x = Tensor::param(x0.to_vec(), &[2, 3]).unwrap();
    let consumers: Vec<Box<dyn Fn(&Tensor) -> Tensor>> = vec![
        Box::new(|t| t.tanh().sum()),
        Box::new(|t| t.square().sum().scale(0.5)),
        Box::new(|t| t.sigmoid().mean()),
    ];
    let mut separate = vec![0.0; 6];
    for c in &consumers {
        let g = backward(&c(&x)).unwrap();
        for (s, v) in separate.iter_mut().zip(g.get(&x).unwrap().data()) {
            *s += v;
        }
    }
    let joint = consumers.iter().map(|c| c(&x)).reduce(|a, b| a.add(&b).unwrap()).unwrap();
    let g = backward(&joint).unwrap();
    for (a, b) in g.get(&x).unwrap().data().iter().zip(&separate) {
        assert!((a - b).abs() < 1e-12);
    }
}

/// Random two-layer net; the double-backprop gradient of a function of
/// `∇ₓ net(x)` w.r.t. the weights must match finite differences of
/// the first-order gradient.
#[test]
fn second_order_matches_finite_differences() {
    let mut total = GradcheckReport::empty();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let (i, h) = (rng.gen_range(2..5), rng.gen_range(2..5));
        let x = rand_tensor(&mut rng, &[2, i], -1.0, 1.0);
        let w1 = rand_tensor(&mut rng, &[i, h], -1.0, 1.0);
        let b1 = rand_tensor(&mut rng, &[h], -1.0, 1.0);
        let w2 = rand_tensor(&mut rng, &[h, 1], -1.0, 1.0);
        let v = rand_tensor(&mut rng, &[2, i], -1.0, 1.0);
        let leaky = seed % 2 == 0;
        let rep = check_all_coordinates(
            |t| {
                let xl = Tensor::param(x.to_vec(), x.shape())?;
                let hid = xl.dense(&t[0], &t[1])?;
                let hid = if leaky { hid.leaky_relu(0.2) } else { hid.tanh() };
                let out = hid.matmul(&t[2])?.sum();
                let gx = grad_as_node(&out, &xl)?;
                // a nonlinear function of the gradient, as in a penalty
                gx.mul(&v)?.sum().add(&gx.square().sum().sqrt()?)
            },
            &[w1, b1, w2],
            FD_STEP,
        )
        .unwrap();
        total = total.merge(rep);
    }
    assert!(total.max_rel_err < SECOND_ORDER_TOL, "max rel err {}", total.max_rel_err);
}

#[test]
fn second_order_through_conv_stack() {
    let mut total = GradcheckReport::empty();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let x = rand_tensor(&mut rng, &[2, 1, 16], -1.0, 1.0);
        let k1 = rand_tensor(&mut rng, &[3, 1, 5], -0.5, 0.5);
        let k2 = rand_tensor(&mut rng, &[2, 3, 3], -0.5, 0.5);
        let shifts = [1isize, -1];
        let rep = check_directions(
            |t| {
                let xl = Tensor::param(x.to_vec(), x.shape())?;
                let h = xl.conv1d_same(&t[0], 2)?.leaky_relu(0.2).phase_shift(&shifts)?;
                let out = h.conv1d_same(&t[1], 2)?.tanh().sum();
                let gx = grad_as_node(&out, &xl)?;
                Result::<Tensor>::Ok(gx.square().sum_per_item()?.sqrt()?.add_scalar(-1.0).square().mean())
            },
            &[k1, k2],
            5,
            FD_STEP,
            &mut rng,
        )
        .unwrap();
        total = total.merge(rep);
    }
    assert!(total.max_rel_err < SECOND_ORDER_TOL, "max rel err {}", total.max_rel_err);
}

proptest! {
    #[test]
    fn forward_replay_is_deterministic(vals in proptest::collection::vec(-3.0f64..3.0, 1..20)) {
        let n = vals.len();
        let run = || {
            let x = Tensor::param(vals.clone(), &[1, 1, n]).unwrap();
            let k = Tensor::new(vec![0.5, -0.25], &[1, 1, 2]).unwrap();
            let y = x.tanh().conv1d_transpose(&k, 2).unwrap().leaky_relu(0.2);
            let g = backward(&y.square().sum()).unwrap();
            (y.to_vec(), g.get(&x).unwrap().to_vec())
        };
        prop_assert_eq!(run(), run());
    }
}
