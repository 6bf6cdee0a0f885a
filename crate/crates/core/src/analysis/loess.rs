//! Local polynomial regression with tricube weights on a uniform grid.

use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoessDegree {
    Linear = 1,
    Quadratic = 2,
}

impl TryFrom<u32> for LoessDegree {
    type Error = crate::Error;

    fn try_from(d: u32) -> Result<Self> {
        match d {
            1 => Ok(LoessDegree::Linear),
            2 => Ok(LoessDegree::Quadratic),
            _ => Err(contract(format!("LOESS degree must be 1 or 2, got {d}"))),
        }
    }
}

/// Smooth `series` sampled at `0, 1, …, n−1`.
///
/// Each point is fitted from its `floor(span·n)` nearest neighbours. The
/// tricube bandwidth is the farthest neighbour's distance plus one sample,
/// so every neighbour keeps a positive weight.
pub fn loess_smooth(series: &[f64], span: f64, degree: LoessDegree) -> Result<Vec<f64>> {
    let n = series.len();
    let p = degree as usize + 1;
    if !(span > 0.0 && span <= 1.0) {
        return Err(contract(format!("LOESS span must be in (0, 1], got {span}")));
    }
    let q = ((span * n as f64).floor() as usize).min(n);
    if q < p {
        return Err(contract(format!(
            "LOESS needs span·n ≥ {p}, got {q} neighbours from {n} samples"
        )));
    }
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(contract(format!("LOESS input contains {v}")));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // q nearest grid points; on ties the left neighbour wins
        let lo = i.saturating_sub(q / 2).min(n - q);
        let window = lo..lo + q;
        let reach = window.clone().map(|j| j.abs_diff(i)).max().unwrap() as f64 + 1.0;
        // weighted normal equations in t = j − i
        let mut ata = [[0.0; 3]; 3];
        let mut aty = [0.0; 3];
        for j in window {
            let t = j as f64 - i as f64;
            let u = (t.abs() / reach).powi(3);
            let w = (1.0 - u).powi(3);
            let basis = [1.0, t, t * t];
            for r in 0..p {
                aty[r] += w * basis[r] * series[j];
                for c in 0..p {
                    ata[r][c] += w * basis[r] * basis[c];
                }
            }
        }
        out.push(solve_intercept(ata, aty, p));
    }
    Ok(out)
}

/// First component of the solution of the `p×p` system (Gaussian
/// elimination with partial pivoting).
fn solve_intercept(mut a: [[f64; 3]; 3], mut b: [f64; 3], p: usize) -> f64 {
    for col in 0..p {
        let piv = (col..p).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            for c in col..p {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x[0]
}
