use std::rc::Rc;

use crate::error::{AdError, Result};
use crate::ops::conv::ConvGeometry;
use crate::ops::signal::{frame_conv_vjp, resonator_vjp, FrameSpec, ResonatorSpec};
use crate::tensor::Tensor;

/// Op record stored on graph nodes. Saved values live in the node's inputs
/// and output; the variant only carries static parameters.
#[derive(Debug, Clone)]
pub(crate) enum Op {
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar,
    MatMul,
    Transpose,
    BiasAdd,
    ChannelSum,
    ChannelBroadcast,
    Reshape,
    Tanh,
    Sigmoid,
    LeakyRelu(f64),
    Clamp(f64, f64),
    SafeRecip,
    Sqrt,
    Sum,
    BroadcastScalar,
    SumPerItem,
    BroadcastPerItem,
    ExpandLast,
    SumLast,
    SelectChannel(usize),
    EmbedChannel(usize),
    ConvCorr(ConvGeometry),
    ConvScatter(ConvGeometry),
    ConvKernelGrad(ConvGeometry),
    PhaseShift(Rc<[isize]>),
    PhaseShiftAdjoint(Rc<[isize]>),
    Frame(FrameSpec),
    OverlapAdd(FrameSpec),
    FrameConv,
    Resonator(ResonatorSpec),
}

fn mask(x: &Tensor, f: impl Fn(f64) -> f64) -> Result<Tensor> {
    Tensor::new(x.data().iter().map(|&v| f(v)).collect(), x.shape())
}

impl Op {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Scale(_) => "scale",
            Op::AddScalar => "add_scalar",
            Op::MatMul => "matmul",
            Op::Transpose => "transpose",
            Op::BiasAdd => "bias_add",
            Op::ChannelSum => "channel_sum",
            Op::ChannelBroadcast => "channel_broadcast",
            Op::Reshape => "reshape",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::LeakyRelu(_) => "leaky_relu",
            Op::Clamp(..) => "clamp",
            Op::SafeRecip => "safe_recip",
            Op::Sqrt => "sqrt",
            Op::Sum => "sum",
            Op::BroadcastScalar => "broadcast_scalar",
            Op::SumPerItem => "sum_per_item",
            Op::BroadcastPerItem => "broadcast_per_item",
            Op::ExpandLast => "expand_last",
            Op::SumLast => "sum_last",
            Op::SelectChannel(_) => "select_channel",
            Op::EmbedChannel(_) => "embed_channel",
            Op::ConvCorr(_) => "conv1d",
            Op::ConvScatter(_) => "conv1d_transpose",
            Op::ConvKernelGrad(_) => "conv1d_kernel_grad",
            Op::PhaseShift(_) => "phase_shift",
            Op::PhaseShiftAdjoint(_) => "phase_shift_adjoint",
            Op::Frame(_) => "frame",
            Op::OverlapAdd(_) => "overlap_add",
            Op::FrameConv => "frame_conv",
            Op::Resonator(_) => "resonator_bank",
        }
    }

    /// Vector-Jacobian products for the inputs flagged in `needs`.
    ///
    /// Built from differentiable ops, so with recording enabled the returned
    /// gradients are themselves graph nodes. Ops without such a rule refuse to
    /// run under `create_graph`.
    pub(crate) fn vjp(
        &self,
        inputs: &[Tensor],
        out: &Tensor,
        g: &Tensor,
        needs: &[bool],
        create_graph: bool,
    ) -> Result<Vec<Option<Tensor>>> {
        let want = |i: usize| needs.get(i).copied().unwrap_or(false);
        let x = &inputs[0];
        let one = |t: Result<Tensor>| -> Result<Vec<Option<Tensor>>> { Ok(vec![Some(t?)]) };
        match self {
            Op::Add => Ok(vec![want(0).then(|| g.clone()), want(1).then(|| g.clone())]),
            Op::Sub => Ok(vec![want(0).then(|| g.clone()), want(1).then(|| g.neg())]),
            Op::Mul => {
                let ga = if want(0) { Some(g.mul(&inputs[1])?) } else { None };
                let gb = if want(1) { Some(g.mul(x)?) } else { None };
                Ok(vec![ga, gb])
            }
            Op::Scale(c) => one(Ok(g.scale(*c))),
            Op::AddScalar => one(Ok(g.clone())),
            Op::MatMul => {
                let ga = if want(0) { Some(g.matmul(&inputs[1].transpose()?)?) } else { None };
                let gb = if want(1) { Some(x.transpose()?.matmul(g)?) } else { None };
                Ok(vec![ga, gb])
            }
            Op::Transpose => one(g.transpose()),
            Op::BiasAdd => {
                let gb = if want(1) { Some(g.channel_sum()?) } else { None };
                Ok(vec![want(0).then(|| g.clone()), gb])
            }
            Op::ChannelSum => one(g.channel_broadcast(x.shape())),
            Op::ChannelBroadcast => one(g.channel_sum()),
            Op::Reshape => one(g.reshape(x.shape())),
            Op::Tanh => {
                // 1 − y²
                let d = out.square().neg().add_scalar(1.0);
                one(g.mul(&d))
            }
            Op::Sigmoid => {
                let d = out.mul(&out.neg().add_scalar(1.0))?;
                one(g.mul(&d))
            }
            Op::LeakyRelu(alpha) => {
                let a = *alpha;
                one(g.mul(&mask(x, |v| if v > 0.0 { 1.0 } else { a })?))
            }
            Op::Clamp(lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                one(g.mul(&mask(x, |v| if v < lo || v > hi { 0.0 } else { 1.0 })?))
            }
            Op::SafeRecip => one(g.mul(&out.square().neg())),
            Op::Sqrt => one(g.mul(&out.safe_recip().scale(0.5))),
            Op::Sum => one(g.broadcast_scalar(x.shape())),
            Op::BroadcastScalar => one(Ok(g.sum())),
            Op::SumPerItem => one(g.broadcast_per_item(x.shape())),
            Op::BroadcastPerItem => one(g.sum_per_item()),
            Op::ExpandLast => one(g.sum_last()),
            Op::SumLast => one(g.expand_last(*x.shape().last().unwrap())),
            Op::SelectChannel(c) => one(g.embed_channel(*c, x.shape()[1])),
            Op::EmbedChannel(c) => one(g.select_channel(*c)),
            Op::ConvCorr(geom) => {
                let k = &inputs[1];
                let gx = if want(0) { Some(g.conv_scatter(k, *geom)?) } else { None };
                let gk = if want(1) { Some(x.conv_kernel_grad(g, *geom)?) } else { None };
                Ok(vec![gx, gk])
            }
            Op::ConvScatter(geom) => {
                let k = &inputs[1];
                let gy = if want(0) { Some(g.conv_corr(k, *geom)?) } else { None };
                let gk = if want(1) { Some(g.conv_kernel_grad(x, *geom)?) } else { None };
                Ok(vec![gy, gk])
            }
            Op::ConvKernelGrad(geom) => {
                let y = &inputs[1];
                let gx = if want(0) { Some(y.conv_scatter(g, *geom)?) } else { None };
                let gy = if want(1) { Some(x.conv_corr(g, *geom)?) } else { None };
                Ok(vec![gx, gy])
            }
            Op::PhaseShift(shifts) => one(g.phase_shift_adjoint(shifts)),
            Op::PhaseShiftAdjoint(shifts) => one(g.phase_shift(shifts)),
            Op::Frame(spec) => one(g.overlap_add(*spec)),
            Op::OverlapAdd(spec) => one(g.frame(*spec)),
            Op::FrameConv => {
                if create_graph {
                    return Err(AdError::NoSecondOrder(self.name()));
                }
                let h = &inputs[1];
                let (gs, gh) = frame_conv_vjp(x, h, g);
                Ok(vec![
                    if want(0) { Some(Tensor::new(gs, x.shape())?) } else { None },
                    if want(1) { Some(Tensor::new(gh, h.shape())?) } else { None },
                ])
            }
            Op::Resonator(spec) => {
                if create_graph {
                    return Err(AdError::NoSecondOrder(self.name()));
                }
                one(Tensor::new(resonator_vjp(x, g, spec), x.shape()))
            }
        }
    }
}
