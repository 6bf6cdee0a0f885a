//! Gradient penalty at random interpolates of real and fake audio.

use artgan_autodiff::{grad_as_node, Tensor};

use crate::error::{contract, Result};

/// `mean_b (‖∇ₓ D(x̂_b)‖₂ − 1)²` with `x̂ = eps·real + (1 − eps)·fake`.
///
/// The result stays differentiable w.r.t. whatever parameters `critic`
/// closes over. `critic` must score items independently (`[B×…] → [B×1]`).
pub fn gp_loss<F>(critic: F, real: &Tensor, fake: &Tensor, eps: &[f64]) -> Result<Tensor>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    if real.shape() != fake.shape() {
        return Err(contract(format!(
            "gradient penalty: real {:?} vs fake {:?}",
            real.shape(),
            fake.shape()
        )));
    }
    let b = *real.shape().first().ok_or_else(|| contract("gradient penalty needs a batch axis"))?;
    if eps.len() != b {
        return Err(contract(format!("gradient penalty: {} mixing weights for batch {b}", eps.len())));
    }
    let inner = real.numel() / b;
    let mixed: Vec<f64> = real
        .data()
        .iter()
        .zip(fake.data())
        .enumerate()
        .map(|(i, (r, f))| {
            let e = eps[i / inner];
            e * r + (1.0 - e) * f
        })
        .collect();
    let x_hat = Tensor::param(mixed, real.shape())?;
    let score = critic(&x_hat)?.sum();
    let g = grad_as_node(&score, &x_hat)?;
    let norm = g.square().sum_per_item()?.sqrt()?;
    Ok(norm.add_scalar(-1.0).square().mean())
}
