//! Dynamic time warping with steps (1,0), (0,1), (1,1) and `|a − b|` cost.

use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub path: Vec<(usize, usize)>,
    pub warped_a: Vec<f64>,
    pub warped_b: Vec<f64>,
    pub total_cost: f64,
}

pub fn dtw_align(a: &[f64], b: &[f64]) -> Result<AlignedPair> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(contract("DTW needs two non-empty series"));
    }
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = best + (a[i] - b[j]).abs();
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        // preference on ties: diagonal, then advance in a, then in b
        let mut best = (f64::INFINITY, (i, j));
        let candidates = [
            (i > 0 && j > 0).then(|| (i - 1, j - 1)),
            (i > 0).then(|| (i - 1, j)),
            (j > 0).then(|| (i, j - 1)),
        ];
        for c in candidates.into_iter().flatten() {
            if acc[at(c.0, c.1)] < best.0 {
                best = (acc[at(c.0, c.1)], c);
            }
        }
        (i, j) = best.1;
        path.push((i, j));
    }
    path.reverse();
    Ok(AlignedPair {
        warped_a: path.iter().map(|&(i, _)| a[i]).collect(),
        warped_b: path.iter().map(|&(_, j)| b[j]).collect(),
        total_cost: acc[at(n - 1, m - 1)],
        path,
    })
}
