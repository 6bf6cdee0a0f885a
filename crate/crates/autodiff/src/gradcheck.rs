//! Central finite-difference checks of analytic gradients.

use rand::Rng;

use crate::backward::backward;
use crate::error::{AdError, Result};
use crate::tensor::Tensor;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Magnitudes below this are compared absolutely rather than relatively.
pub const REL_ERR_FLOOR: f64 = 1e-7;

/// `|a − n| / max(|a|, |n|, REL_ERR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
    (analytic - numeric).abs() / scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckReport {
    pub checks: usize,
    pub max_rel_err: f64,
}

impl GradcheckReport {
    pub fn empty() -> Self {
        Self { checks: 0, max_rel_err: 0.0 }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            checks: self.checks + other.checks,
            max_rel_err: self.max_rel_err.max(other.max_rel_err),
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64) {
        self.checks += 1;
        let e = relative_error(analytic, numeric);
        // NaN must not hide behind max()
        self.max_rel_err = if e.is_nan() { f64::INFINITY } else { self.max_rel_err.max(e) };
    }
}

fn leaves(inputs: &[Tensor]) -> Result<Vec<Tensor>> {
    inputs.iter().map(|t| Tensor::param(t.to_vec(), t.shape())).collect()
}

fn analytic<F, E>(f: &F, inputs: &[Tensor]) -> std::result::Result<Vec<Vec<f64>>, E>
where
    F: Fn(&[Tensor]) -> std::result::Result<Tensor, E>,
    E: From<AdError>,
{
    let xs = leaves(inputs)?;
    let loss = f(&xs)?;
    let grads = backward(&loss)?;
    Ok(xs.iter().map(|x| grads.get_or_zeros(x).to_vec()).collect())
}

fn eval_at<F, E>(f: &F, inputs: &[Tensor], shift: &dyn Fn(usize, usize) -> f64) -> std::result::Result<f64, E>
where
    F: Fn(&[Tensor]) -> std::result::Result<Tensor, E>,
    E: From<AdError>,
{
    let xs: Vec<Tensor> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let data = t.data().iter().enumerate().map(|(j, v)| v + shift(i, j)).collect();
            Tensor::new(data, t.shape())
        })
        .collect::<Result<_>>()?;
    // recording stays on: `f` may itself differentiate (double backprop)
    Ok(f(&xs)?.item())
}

/// Check every coordinate of every input of a scalar function.
pub fn check_all_coordinates<F, E>(f: F, inputs: &[Tensor], step: f64) -> std::result::Result<GradcheckReport, E>
where
    F: Fn(&[Tensor]) -> std::result::Result<Tensor, E>,
    E: From<AdError>,
{
    let grads = analytic(&f, inputs)?;
    let mut report = GradcheckReport::empty();
    for (i, t) in inputs.iter().enumerate() {
        for j in 0..t.numel() {
            let plus = eval_at(&f, inputs, &|a, b| if (a, b) == (i, j) { step } else { 0.0 })?;
            let minus = eval_at(&f, inputs, &|a, b| if (a, b) == (i, j) { -step } else { 0.0 })?;
            report.record(grads[i][j], (plus - minus) / (2.0 * step));
        }
    }
    Ok(report)
}

/// Check directional derivatives along `directions` random directions
/// (entries uniform in `[-1, 1]`, all inputs perturbed jointly).
pub fn check_directions<F, R, E>(
    f: F,
    inputs: &[Tensor],
    directions: usize,
    step: f64,
    rng: &mut R,
) -> std::result::Result<GradcheckReport, E>
where
    F: Fn(&[Tensor]) -> std::result::Result<Tensor, E>,
    R: Rng + ?Sized,
    E: From<AdError>,
{
    let grads = analytic(&f, inputs)?;
    let mut report = GradcheckReport::empty();
    for _ in 0..directions {
        let dirs: Vec<Vec<f64>> = inputs
            .iter()
            .map(|t| (0..t.numel()).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let want: f64 = grads
            .iter()
            .zip(&dirs)
            .map(|(g, d)| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let plus = eval_at(&f, inputs, &|a, b| step * dirs[a][b])?;
        let minus = eval_at(&f, inputs, &|a, b| -step * dirs[a][b])?;
        report.record(want, (plus - minus) / (2.0 * step));
    }
    Ok(report)
}
