//! Odds ratio and two-sided Fisher exact test for a 2×2 table
//!
//! ```text
//!        yes  no
//! group   a    b
//! other   c    d
//! ```

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatioTest {
    /// `a·d / (b·c)`; `None` when `b·c = 0`.
    pub odds_ratio: Option<f64>,
    pub p_value: f64,
}

/// Relative slack when comparing table probabilities against the observed one.
const TIE_TOLERANCE: f64 = 1e-7;

pub fn odds_ratio_test(a: u64, b: u64, c: u64, d: u64) -> OddsRatioTest {
    let odds_ratio = (b * c != 0).then(|| (a * d) as f64 / (b * c) as f64);
    OddsRatioTest {
        odds_ratio,
        p_value: fisher_two_sided(a, b, c, d),
    }
}

/// Sum of hypergeometric probabilities of all tables with the observed
/// margins that are no more likely than the observed table.
pub fn fisher_two_sided(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if n == 0 {
        return 1.0;
    }
    let lf = ln_factorials(n as usize);
    let ln_choose = |n: u64, k: u64| lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
    let ln_total = ln_choose(n, c1);
    let ln_p = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_total;
    let observed = ln_p(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let limit = observed + TIE_TOLERANCE.ln_1p();
    let p: f64 = (lo..=hi).map(ln_p).filter(|&l| l <= limit).map(f64::exp).sum();
    p.min(1.0)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}
