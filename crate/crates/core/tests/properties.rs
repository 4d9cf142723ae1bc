use envdiv_core::archive::{Dimension, GridArchive, InsertOutcome, SampleMask, Solution};
use envdiv_core::domain::racing::features::track_features;
use envdiv_core::domain::racing::{Racing, RacingConfig};
use envdiv_core::domain::{Alphabet, Domain};
use envdiv_core::emitters::mutate;
use envdiv_core::objectives::{combine, j_align, j_diverse};
use envdiv_core::target::{build_cell_prior, fit_feature, SelectionRule};
use envdiv_core::{FeatureKind, Genotype};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn small_archive() -> GridArchive {
    GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 5), Dimension::new("b", -2.0, 2.0, 4)]).unwrap()
}

fn solution(a: f64, b: f64, objective: f64, birth: u64) -> Solution {
    Solution { genotype: Genotype::Discrete(vec![0]), features: vec![a, b], objective, birth_iter: birth }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elites_only_improve_and_cells_are_never_lost(
        inserts in prop::collection::vec((-0.5f64..1.5, -3.0f64..3.0, -10.0f64..10.0), 1..200)
    ) {
        let mut archive = small_archive();
        let mut best = vec![f64::NEG_INFINITY; archive.num_cells()];
        let (mut new, mut replaced, mut rejected) = (0usize, 0usize, 0usize);
        for (i, &(a, b, obj)) in inserts.iter().enumerate() {
            let before = archive.len();
            let outcome = archive.insert(solution(a, b, obj, i as u64)).unwrap();
            let cell = archive.flat_index(&archive.cell_index(&[a, b]).unwrap());
            match outcome {
                InsertOutcome::NewCell => new += 1,
                InsertOutcome::Replaced { improvement } => {
                    replaced += 1;
                    prop_assert!(improvement > 0.0);
                }
                InsertOutcome::RejectedWorse { deficit } => {
                    rejected += 1;
                    prop_assert!(deficit >= 0.0);
                }
            }
            best[cell] = best[cell].max(obj);
            prop_assert!(archive.len() >= before);
            for (c, s) in archive.iter() {
                prop_assert_eq!(s.objective, best[c]);
            }
        }
        prop_assert_eq!(new + replaced + rejected, inserts.len());
        prop_assert_eq!(new, archive.len());
    }

    #[test]
    fn every_finite_point_has_a_cell(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let archive = small_archive();
        let idx = archive.cell_index(&[a, b]).unwrap();
        prop_assert!(idx[0] < 5 && idx[1] < 4);
        prop_assert!(archive.flat_index(&idx) < archive.num_cells());
    }

    #[test]
    fn mask_only_shrinks_as_progress_grows(
        full in prop::collection::vec((-10.0f64..0.0, 1.0f64..10.0), 1..4),
        steps in prop::collection::vec(0.0f64..1.0, 1..30),
        inner_frac in prop::collection::vec((0.0f64..0.45, 0.55f64..1.0), 4),
    ) {
        let target: Vec<(f64, f64)> = full
            .iter()
            .zip(&inner_frac)
            .map(|(&(lo, hi), &(fl, fh))| (lo + fl * (hi - lo), lo + fh * (hi - lo)))
            .collect();
        let mut progress = steps.clone();
        progress.sort_by(f64::total_cmp);
        let mut prev = SampleMask { bounds: full.clone() };
        for t in progress {
            let next = SampleMask::lerp(&full, &target, t);
            prop_assert!(next.is_within(&prev));
            prev = next;
        }
    }

    #[test]
    fn mutation_stays_in_the_alphabet(
        genes in prop::collection::vec(-1i32..=1, 1..100),
        rate in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let alphabets = vec![Alphabet::TRINARY; genes.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let child = mutate(&genes, &alphabets, rate, &mut rng);
        prop_assert_eq!(child.len(), genes.len());
        prop_assert!(child.iter().all(|&g| Alphabet::TRINARY.contains(g)));
    }

    #[test]
    fn cell_priors_are_normalized(
        xs in prop::collection::vec(-5.0f64..5.0, 5..60),
        ys in prop::collection::vec(0.0f64..1.0, 5..60),
        bins in (1usize..30, 1usize..30),
    ) {
        let fx = fit_feature("x", &xs, FeatureKind::Continuous, SelectionRule::Likelihood).unwrap();
        let fy = fit_feature("y", &ys, FeatureKind::Continuous, SelectionRule::Likelihood).unwrap();
        let archive = GridArchive::new(vec![
            Dimension::new("x", fx.lower, fx.upper, bins.0),
            Dimension::new("y", fy.lower, fy.upper, bins.1),
        ]).unwrap();
        let prior = build_cell_prior(&[&fx, &fy], &archive).unwrap();
        let total: f64 = prior.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(prior.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn alignment_is_never_positive_and_diversity_never_negative(
        f in prop::collection::vec(-100.0f64..100.0, 3),
        t in prop::collection::vec(-100.0f64..100.0, 3),
        refs in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 0..6),
        ranges in prop::collection::vec(0.0f64..50.0, 3),
    ) {
        prop_assert!(j_align(&f, &t, &ranges) <= 0.0);
        prop_assert!(j_diverse(&f, &refs, &ranges) >= 0.0);
    }

    #[test]
    fn newer_batches_always_outrank_older_ones(
        iter in 0u64..1_000_000,
        parts in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 6), 1..4),
    ) {
        let now = combine(true, iter + 1, &parts, 6);
        let before = combine(true, iter, &parts, 6);
        let lowest_now = now.iter().cloned().fold(f64::INFINITY, f64::min);
        let highest_before = before.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lowest_now > highest_before);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn track_features_ignore_the_start_index(
        genes in prop::collection::vec(0.0f64..=1.0, 24),
        shift in 0usize..480,
        seg_shift in 0usize..12,
    ) {
        let env = Racing::new(RacingConfig { k: 1, ..RacingConfig::default() }).unwrap();
        let level = env.generate(&Genotype::Continuous(genes)).unwrap();
        let base = track_features(&level, 0.1);
        let mut rotated = level.clone();
        rotated.polyline.rotate_left(shift);
        rotated.segments.rotate_left(seg_shift);
        rotated.midpoint_curvature.rotate_left(seg_shift);
        rotated.segment_lengths.rotate_left(seg_shift);
        rotated.control_points.rotate_left(seg_shift);
        let moved = track_features(&rotated, 0.1);
        for (i, (a, b)) in base.iter().zip(&moved).enumerate() {
            prop_assert!(close(*a, *b), "feature {}: {} vs {}", i, a, b);
        }
    }

    #[test]
    fn closed_tracks_turn_at_least_once_around(genes in prop::collection::vec(0.0f64..=1.0, 24), k in 1usize..40) {
        let env = Racing::new(RacingConfig { k, ..RacingConfig::default() }).unwrap();
        if let Ok(level) = env.generate(&Genotype::Continuous(genes)) {
            let tac = envdiv_core::domain::racing::features::total_angle_changes(&level);
            prop_assert!(tac >= 2.0 * PI - 1e-9, "tac {}", tac);
        }
    }
}
