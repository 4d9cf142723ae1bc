//! Numeric checks against independently computed reference values.

use envdiv_core::archive::{Dimension, GridArchive, SampleMask, Solution};
use envdiv_core::domain::alchemy::{self, Alchemy, AlchemyConfig};
use envdiv_core::domain::racing::features::{self, track_features, NAMES};
use envdiv_core::domain::racing::track::TrackLevel;
use envdiv_core::domain::racing::{Racing, RacingConfig};
use envdiv_core::domain::{Domain, GridNav};
use envdiv_core::pipeline::draw_level;
use envdiv_core::stats;
use envdiv_core::target::{build_cell_prior, Distribution, FittedFeature};
use envdiv_core::{CellPrior, FeatureKind, Genotype};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn normal_fit(mean: f64, std: f64) -> FittedFeature {
    FittedFeature {
        name: "x".into(),
        kind: FeatureKind::Continuous,
        distribution: Distribution::Normal { mean, std },
        statistic: 0.0,
        p_value: 1.0,
        lower: mean - 3.0 * std,
        upper: mean + 3.0 * std,
        lattice: None,
        candidates: Vec::new(),
    }
}

/// Composite Simpson integral of the normal density.
fn simpson_mass(a: f64, b: f64, mean: f64, std: f64) -> f64 {
    let pdf = |x: f64| (-(x - mean) * (x - mean) / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt());
    let n = 20_000;
    let h = (b - a) / n as f64;
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn cell_prior_matches_integrated_density() {
    let archive = GridArchive::new(vec![Dimension::new("x", 0.0, 3.0, 3)]).unwrap();
    let fit = normal_fit(1.5, 0.5);
    let prior = build_cell_prior(&[&fit], &archive).unwrap();
    let raw: Vec<f64> = (0..3).map(|i| simpson_mass(i as f64, i as f64 + 1.0, 1.5, 0.5)).collect();
    let total: f64 = raw.iter().sum();
    for (w, r) in prior.weights().iter().zip(&raw) {
        assert!((w - r / total).abs() < 1e-9, "{w} vs {}", r / total);
    }
}

#[test]
fn prior_weighted_draw_frequencies() {
    let mut archive = GridArchive::new(vec![Dimension::new("x", 0.0, 4.0, 4)]).unwrap();
    for x in [0.5, 2.5] {
        archive
            .insert(Solution { genotype: Genotype::Discrete(vec![x as i32]), features: vec![x], objective: 0.0, birth_iter: 0 })
            .unwrap();
    }
    let prior = CellPrior::from_weights(vec![0.6, 0.1, 0.2, 0.1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let first = (0..n).filter(|_| archive.sample_prior_weighted(&prior, &mut rng).unwrap().features[0] < 1.0).count();
    assert!((first as f64 / n as f64 - 0.75).abs() < 0.02);
}

#[test]
fn full_mask_sampling_is_uniform() {
    let mut archive = GridArchive::new(vec![Dimension::new("x", 0.0, 10.0, 10)]).unwrap();
    for i in 0..10 {
        let x = i as f64 + 0.5;
        archive.insert(Solution { genotype: Genotype::Discrete(vec![i]), features: vec![x], objective: 0.0, birth_iter: 0 }).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mask = SampleMask::full(&archive);
    let draws = archive.sample_uniform_masked(Some(&mask), 100_000, &mut rng).unwrap();
    let mut counts = [0f64; 10];
    for s in draws {
        counts[s.features[0] as usize] += 1.0;
    }
    let expected = 10_000.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum();
    assert!(stats::chi_squared_sf(chi2, 9.0) > 0.01, "chi2 {chi2}");
}

#[test]
fn narrow_mask_only_returns_its_elites() {
    let mut archive = GridArchive::new(vec![Dimension::new("x", 0.0, 50.0, 50)]).unwrap();
    for i in 0..50 {
        archive
            .insert(Solution { genotype: Genotype::Discrete(vec![i]), features: vec![i as f64 + 0.5], objective: 0.0, birth_iter: 0 })
            .unwrap();
    }
    let mask = SampleMask { bounds: vec![(10.0, 12.0)] };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in archive.sample_uniform_masked(Some(&mask), 10_000, &mut rng).unwrap() {
        assert!(s.features[0] == 10.5 || s.features[0] == 11.5);
    }
}

#[test]
fn gridnav_initial_rows_follow_dp_marginal() {
    let env = GridNav::new(11, 24).unwrap();
    let oracle = env.row_marginal();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut hist = [0f64; 11];
    let n = 1000;
    for _ in 0..n {
        let f = env.evaluate(&env.random_genotype(&mut rng)).unwrap();
        hist[f[1] as usize] += 1.0 / n as f64;
    }
    let tv: f64 = hist.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.05, "tv {tv}");
    let center = oracle[5];
    assert!(oracle.iter().enumerate().all(|(i, &p)| i == 5 || p < center));
    assert!(center / oracle[0].max(oracle[10]) > 100.0);
}

#[test]
fn gridnav_uniform_prior_draws_are_uniform() {
    let env = GridNav::new(11, 1).unwrap();
    let dims = vec![Dimension::new("XPosition", 0.0, 11.0, 11), Dimension::new("YPosition", 0.0, 11.0, 11)];
    let mut archive = GridArchive::new(dims).unwrap();
    // With k = 1 a single gene picks one of rows 0, 5 and 10; fill those cells.
    for x in 0..11 {
        for s in -1..=1 {
            let g = Genotype::Discrete(vec![x, s]);
            let f = env.evaluate(&g).unwrap();
            archive.insert(Solution { genotype: g, features: f, objective: 0.0, birth_iter: 0 }).unwrap();
        }
    }
    let prior = CellPrior::from_weights(vec![1.0; 121]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut hist = vec![0f64; 121];
    for _ in 0..n {
        let (_, level) = draw_level(&env, &archive, &prior, &mut rng).unwrap();
        hist[(level.goal_x * 11 + level.goal_y) as usize] += 1.0 / n as f64;
    }
    let occupied = archive.len() as f64;
    let tv: f64 = archive.iter().map(|(c, _)| (hist[c] - 1.0 / occupied).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.03, "tv {tv}");
}

#[test]
fn alchemy_random_genotypes_sit_near_the_far_corner() {
    let env = Alchemy::new(AlchemyConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 10_000;
    let mto = env.feature_index("ManhattanToOptimal").unwrap();
    let mean: f64 = (0..n).map(|_| env.evaluate(&env.random_genotype(&mut rng)).unwrap()[mto]).sum::<f64>() / n as f64;
    let expected = 3.0 * (1.0 - 2f64.powi(-8));
    assert!((mean - expected).abs() < 0.01, "{mean} vs {expected}");
}

#[test]
fn alchemy_structured_single_trial_marginals() {
    let env = Alchemy::new(AlchemyConfig { trials: 1, ..AlchemyConfig::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 20_000;
    let samples = env.sample_target(n, &mut rng).unwrap();
    let mto = samples.column(samples.index_of("ManhattanToOptimal").unwrap());
    let lsd = samples.column(samples.index_of("LatentStateDiversity").unwrap());
    let pfs = samples.column(samples.index_of("ParityFirstStone").unwrap());

    // Each of the three coordinates of each stone is Bernoulli(1/2).
    let sd = (3.0f64 * 0.25 / 3.0).sqrt() / (n as f64).sqrt();
    assert!((stats::mean(&mto) - 1.5).abs() < 3.0 * sd);

    // Population std of three Bernoulli(1/2) bits is 0 w.p. 1/4 and sqrt(2)/3 otherwise.
    let lsd_expected = 0.75 * 2f64.sqrt() / 3.0;
    assert!((stats::mean(&lsd) / lsd_expected - 1.0).abs() < 0.01);

    for (v, w) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
        let freq = pfs.iter().filter(|&&p| p == v as f64).count() as f64 / n as f64;
        let p = w / 8.0;
        assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "pfs {v}: {freq}");
    }
}

#[test]
fn alchemy_hand_computed_features() {
    let t = true;
    let f = false;
    let level = alchemy::AlchemyLevel::single_trial(vec![[t, t, t], [f, f, f], [t, f, f]]);
    assert!((alchemy::manhattan_to_optimal(&level) - 5.0 / 3.0).abs() < 1e-12);
    let level = alchemy::AlchemyLevel::single_trial(vec![[t, f, f], [t, t, f], [t, f, t]]);
    assert!((alchemy::latent_state_diversity(&level) - 2.0 * (2.0f64).sqrt() / 9.0).abs() < 1e-12);
    let level = alchemy::AlchemyLevel::single_trial(vec![[f, f, f], [t, f, f], [t, t, f]]);
    let mean = (2.0 + 2f64.sqrt()) / 3.0;
    let var = (2.0 * (1.0 - mean).powi(2) + (2f64.sqrt() - mean).powi(2)) / 3.0;
    assert!((alchemy::stone_to_stone_distance(&level) - mean).abs() < 1e-12);
    assert!((alchemy::stone_to_stone_distance_variance(&level) - var).abs() < 1e-12);
}

fn circle_track(r: f64, n: usize, m: usize) -> TrackLevel {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            [50.0 + r * a.cos(), 50.0 + r * a.sin()]
        })
        .collect();
    TrackLevel::through_points(&pts, m)
}

#[test]
fn sparse_circle_keeps_area_length_and_turning() {
    let r = 40.0;
    let level = circle_track(r, 12, 40);
    assert!((features::enclosed_area(&level) / (PI * r * r) - 1.0).abs() < 0.002);
    assert!((features::curve_length(&level) / (2.0 * PI * r) - 1.0).abs() < 0.002);
    assert!((features::total_angle_changes(&level) - 2.0 * PI).abs() < 0.01);
}

#[test]
fn circle_geometry() {
    // A dense circle: 480 control points, one polyline sample per span.
    let r = 40.0;
    let level = circle_track(r, 480, 1);
    assert_eq!(level.polyline.len(), 480);
    let area = features::enclosed_area(&level);
    let length = features::curve_length(&level);
    let curvature = features::average_curvature(&level);
    assert!((area / (PI * r * r) - 1.0).abs() < 0.002, "area {area}");
    assert!((length / (2.0 * PI * r) - 1.0).abs() < 0.002, "length {length}");
    assert!((curvature * r - 1.0).abs() < 0.01, "curvature {curvature}");
    assert!((features::total_angle_changes(&level) - 2.0 * PI).abs() < 0.01);
}

#[test]
fn square_track_is_symmetric() {
    let mut pts = Vec::new();
    for &(x, y) in &[(20.0, 20.0), (80.0, 20.0), (80.0, 80.0), (20.0, 80.0)] {
        pts.push([x, y]);
    }
    // Side midpoints keep the spline close to the square's outline.
    let mut with_mid = Vec::new();
    for i in 0..4 {
        let (a, b) = (pts[i], pts[(i + 1) % 4]);
        with_mid.push(a);
        with_mid.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
    }
    let level = TrackLevel::through_points(&with_mid, 40);
    let f = track_features(&level, 0.1);
    let idx = |name: &str| NAMES.iter().position(|n| *n == name).unwrap();
    assert!((f[idx("CenterOfMassX")] - 50.0).abs() < 1e-9);
    assert!((f[idx("CenterOfMassY")] - 50.0).abs() < 1e-9);
    assert!((f[idx("VarianceX")] - f[idx("VarianceY")]).abs() < 1e-9);
}

#[test]
fn structured_tracks_turn_more_than_unstructured_ones() {
    let env = Racing::new(RacingConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tac = NAMES.iter().position(|n| *n == "TotalAngleChanges").unwrap();
    let target = env.sample_target(400, &mut rng).unwrap().column(tac);
    assert!(stats::median(&target) > 2.0 * PI);
    let unstructured: Vec<f64> = (0..400)
        .filter_map(|_| env.evaluate(&env.random_genotype(&mut rng)))
        .map(|f| f[tac])
        .collect();
    let med = stats::median(&unstructured);
    assert!(med < stats::median(&target));
    assert!((med - 2.0 * PI).abs() < 1.0, "unstructured median {med}");
}

#[test]
fn clustered_control_points_are_rejected_and_circles_accepted() {
    let env = Racing::new(RacingConfig::default()).unwrap();
    let circle: Vec<f64> = (0..12)
        .flat_map(|i| {
            let a = 2.0 * PI * i as f64 / 12.0;
            [0.5 + 0.4 * a.cos(), 0.5 + 0.4 * a.sin()]
        })
        .collect();
    assert!(env.generate_structured(&circle).is_ok());
    let cluster: Vec<f64> = (0..12)
        .flat_map(|i| {
            let a = 2.0 * PI * i as f64 / 12.0;
            [0.5 + 0.05 * a.cos(), 0.5 + 0.05 * a.sin()]
        })
        .collect();
    assert!(env.generate_structured(&cluster).is_err());
}
