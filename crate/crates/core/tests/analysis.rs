use artgan::analysis::*;
use artgan::ema::{EmaTrajectory, NUM_ARTICULATOR_CHANNELS};
use artgan::synthetic::synthetic_ema;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

mod common;
use common::*;

fn check_path(a: &[f64], b: &[f64], p: &AlignedPair) {
    assert_eq!(p.path.first(), Some(&(0, 0)));
    assert_eq!(p.path.last(), Some(&(a.len() - 1, b.len() - 1)));
    for w in p.path.windows(2) {
        let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        assert!(matches!((di, dj), (1, 0) | (0, 1) | (1, 1)), "bad step {w:?}");
    }
    let cost: f64 = p.path.iter().map(|&(i, j)| (a[i] - b[j]).abs()).sum();
    assert_eq!(cost, p.total_cost);
    assert_eq!(p.warped_a.len(), p.path.len());
    assert_eq!(p.warped_b.len(), p.path.len());
}

#[test]
fn dtw_matches_exhaustive_enumeration_up_to_length_six() {
    let series: Vec<Vec<Vec<f64>>> = (1..=6).map(all_series).collect();
    let mut pairs = 0u64;
    for sa in &series {
        for sb in &series {
            for a in sa {
                for b in sb {
                    let got = dtw_align(a, b).unwrap();
                    assert_eq!(got.total_cost, dtw_brute(a, b), "a={a:?} b={b:?}");
                    pairs += 1;
                }
            }
        }
    }
    assert_eq!(pairs, 1092 * 1092);
}

#[test]
fn dtw_returned_paths_are_valid_and_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let a: Vec<f64> = (0..rng.gen_range(1..9)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..rng.gen_range(1..9)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = dtw_align(&a, &b).unwrap();
        check_path(&a, &b, &p);
        assert!((p.total_cost - dtw_brute(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn dtw_small_cases() {
    let p = dtw_align(&[0.0, 1.0, 2.0], &[0.0, 2.0]).unwrap();
    assert_eq!(p.total_cost, 1.0);
    let x = [0.3, -1.0, 2.0, 0.5];
    let same = dtw_align(&x, &x).unwrap();
    assert_eq!(same.total_cost, 0.0);
    assert_eq!(same.path, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    assert!(dtw_align(&[], &x).is_err());
}

proptest! {
    #[test]
    fn dtw_cost_is_symmetric(
        a in proptest::collection::vec(-5.0f64..5.0, 1..12),
        b in proptest::collection::vec(-5.0f64..5.0, 1..12),
    ) {
        let ab = dtw_align(&a, &b).unwrap().total_cost;
        let ba = dtw_align(&b, &a).unwrap().total_cost;
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }
}

#[test]
fn pearson_matches_closed_form_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(3..60);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mix = rng.gen_range(-1.0..1.0);
        let b: Vec<f64> = a.iter().map(|x| mix * x + rng.gen_range(-1.0..1.0)).collect();
        let r = pearson_r(&a, &b).unwrap().unwrap();
        assert!((r - pearson_closed_form(&a, &b)).abs() <= 1e-12);
    }
}

#[test]
fn pearson_examples() {
    let a = [1.0, 2.0, 3.0];
    assert!((pearson_r(&a, &[1.0, 3.0, 2.0]).unwrap().unwrap() - 0.5).abs() < 1e-15);
    let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
    assert_eq!(pearson_r(&a, &b).unwrap(), Some(1.0));
    let c: Vec<f64> = a.iter().map(|x| -x).collect();
    assert_eq!(pearson_r(&a, &c).unwrap(), Some(-1.0));
    assert_eq!(pearson_r(&a, &[2.0, 2.0, 2.0]).unwrap(), None);
    assert!(pearson_r(&a, &[1.0]).is_err());
}

proptest! {
    #[test]
    fn loess_reproduces_lines(
        n in 3usize..120,
        slope in -10.0f64..10.0,
        icpt in -10.0f64..10.0,
        span in 0.05f64..=1.0,
        quadratic in any::<bool>(),
    ) {
        let x: Vec<f64> = (0..n).map(|i| icpt + slope * i as f64).collect();
        let degree = if quadratic { LoessDegree::Quadratic } else { LoessDegree::Linear };
        // a quadratic fit needs three distinct points in the window
        prop_assume!(!quadratic || (span * n as f64).floor() >= 3.0);
        prop_assume!((span * n as f64).floor() >= 2.0);
        let y = loess_smooth(&x, span, degree).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn loess_keeps_constants(n in 2usize..80, c in -5.0f64..5.0, span in 0.2f64..=1.0) {
        prop_assume!((span * n as f64).floor() >= 2.0);
        let y = loess_smooth(&vec![c; n], span, LoessDegree::Linear).unwrap();
        prop_assert!(y.iter().all(|v| (v - c).abs() <= 1e-12));
    }
}

#[test]
fn loess_denoises_sine() {
    let n = 200;
    let clean: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
        .collect();
    let normal = Normal::new(0.0, 0.1).unwrap();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy: Vec<f64> = clean.iter().map(|c| c + normal.sample(&mut rng)).collect();
        for degree in [LoessDegree::Linear, LoessDegree::Quadratic] {
            let smooth = loess_smooth(&noisy, 0.2, degree).unwrap();
            assert!(rmse(&smooth, &clean) < rmse(&noisy, &clean), "seed {seed}");
        }
    }
}

#[test]
fn loess_rejects_bad_arguments() {
    let x = [1.0, 2.0, 3.0];
    assert!(loess_smooth(&x, 0.0, LoessDegree::Linear).is_err());
    assert!(loess_smooth(&x, 1.5, LoessDegree::Linear).is_err());
    assert!(loess_smooth(&[], 0.5, LoessDegree::Linear).is_err());
    assert!(LoessDegree::try_from(3).is_err());
}

fn word(w: &str) -> EmaTrajectory {
    synthetic_ema(w, 256).unwrap()
}

/// `x[t − shift]`, holding the first sample.
fn delayed(x: &EmaTrajectory, shift: usize) -> EmaTrajectory {
    let channels = x
        .channels()
        .iter()
        .map(|c| (0..c.len()).map(|t| c[t.saturating_sub(shift)]).collect())
        .collect();
    EmaTrajectory::new(channels).unwrap()
}

#[test]
fn pipeline_identity_and_shift() {
    let opts = PipelineOptions::default();
    for w in ["water", "greasy", "ask"] {
        let x = word(w);
        let same = dtw_corr_pipeline(&x, &x, &opts).unwrap();
        assert_eq!(same.rows.len(), NUM_ARTICULATOR_CHANNELS);
        for row in &same.rows {
            assert!((row.r.unwrap() - 1.0).abs() < 1e-12, "{w} {}{}", row.place, row.axis);
            assert_eq!(row.dtw_cost, 0.0);
        }
        let shifted = dtw_corr_pipeline(&x, &delayed(&x, 10), &opts).unwrap();
        for row in &shifted.rows {
            assert!(row.r.unwrap() >= 0.99, "{w} {}{}: {:?}", row.place, row.axis, row.r);
        }
    }
}

#[test]
fn pipeline_report_csv() {
    let x = word("rag");
    let report = dtw_corr_pipeline(&x, &x, &PipelineOptions::default()).unwrap();
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER);
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("li,x,1,"));
    assert!(lines[12].starts_with("td,y,"));
}

#[test]
fn export_real_columns() {
    let g = word("oily");
    let r = word("wash");
    let parse = |s: &str| -> Vec<Vec<String>> {
        s.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
    };
    let none = trajectory_export(&g, None, DEFAULT_REAL_SCALE, 0.2, LoessDegree::Linear).unwrap();
    assert_eq!(none.len(), 6);
    for (_, csv) in &none {
        assert_eq!(csv.lines().next(), Some(EXPORT_HEADER));
        assert!(parse(csv).iter().all(|row| row.len() == 5 && row[3].is_empty() && row[4].is_empty()));
    }
    let unit = trajectory_export(&g, Some(&r), 1.0, 0.2, LoessDegree::Linear).unwrap();
    let tripled = trajectory_export(&g, Some(&r), DEFAULT_REAL_SCALE, 0.2, LoessDegree::Linear).unwrap();
    for (p, ((place, a), (_, b))) in unit.iter().zip(&tripled).enumerate() {
        for (t, (ra, rb)) in parse(a).iter().zip(parse(b)).enumerate() {
            let x: f64 = ra[3].parse().unwrap();
            let y: f64 = rb[3].parse().unwrap();
            assert_eq!(x, r.channel(2 * p)[t], "{place}");
            assert!((y - 3.0 * x).abs() <= 1e-12 * x.abs().max(1.0));
            assert_eq!(ra[1], rb[1]);
        }
    }
}

#[test]
fn fisher_matches_enumeration_for_margins_up_to_twelve() {
    let mut tables = 0;
    for a in 0..=12u64 {
        for b in 0..=12 - a {
            for c in 0..=12 - a {
                for d in 0..=(12 - c).min(12 - b) {
                    let t = odds_ratio_test(a, b, c, d);
                    let want = fisher_oracle(a, b, c, d);
                    assert!(
                        (t.p_value - want).abs() <= 1e-12 * want.max(1e-300) + 1e-15,
                        "({a},{b},{c},{d}): {} vs {want}",
                        t.p_value
                    );
                    assert!(t.p_value <= 1.0 + 1e-12);
                    match t.odds_ratio {
                        None => assert_eq!(b * c, 0),
                        Some(or) => assert_eq!(or, (a * d) as f64 / (b * c) as f64),
                    }
                    tables += 1;
                }
            }
        }
    }
    assert!(tables > 1000);
}

#[test]
fn odds_ratio_examples() {
    assert_eq!(odds_ratio_test(10, 10, 10, 10).odds_ratio, Some(1.0));
    let t = odds_ratio_test(3, 7, 2, 8);
    assert!((t.odds_ratio.unwrap() - 24.0 / 14.0).abs() < 1e-15);
    assert!((t.p_value - fisher_oracle(3, 7, 2, 8)).abs() < 1e-12);
    assert_eq!(fisher_two_sided(0, 0, 0, 0), 1.0);
}
