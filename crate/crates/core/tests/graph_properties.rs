use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sdgcl_core::augment::{make_views, perturb_directions, perturb_signs, PerturbationConfig};
use sdgcl_core::graph::{sample_training_edges, split_edges, EdgeRecord};
use sdgcl_core::synthetic::random_signed_digraph;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_edges(seed in any::<u64>(), n in 4usize..40, density in 0.05f64..0.4) {
        let g = random_signed_digraph(n, density, 0.7, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(g.num_edges() >= 5);
        let split = split_edges(&g, seed).unwrap();
        let total = g.num_edges();
        prop_assert_eq!(split.train.len(), (total as f64 * 0.6).round() as usize);
        prop_assert_eq!(split.valid.len(), (total as f64 * 0.2).round() as usize);
        let all: HashSet<EdgeRecord> = split.train.iter().chain(&split.valid).chain(&split.test).copied().collect();
        prop_assert_eq!(all.len(), total);
        prop_assert!(g.edges().all(|e| all.contains(&e)));
        prop_assert_eq!(split_edges(&g, seed).unwrap(), split);
    }

    #[test]
    fn sampling_keeps_all_negatives_once(seed in any::<u64>(), ratio in 1usize..5) {
        let g = random_signed_digraph(30, 0.15, 0.8, &mut ChaCha8Rng::seed_from_u64(seed));
        let train = g.edge_records();
        let negatives = g.num_negative();
        prop_assume!(negatives > 0);
        let s = sample_training_edges(&train, ratio, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        let unique: HashSet<EdgeRecord> = s.iter().copied().collect();
        prop_assert_eq!(unique.len(), s.len());
        prop_assert_eq!(s.iter().filter(|e| !e.sign.is_positive()).count(), negatives);
        let positives = s.iter().filter(|e| e.sign.is_positive()).count();
        prop_assert_eq!(positives, (ratio * negatives).min(g.num_positive()));
        prop_assert!(s.iter().all(|e| g.sign(e.src, e.dst) == Some(e.sign)));
    }

    #[test]
    fn perturbations_keep_invariants(seed in any::<u64>(), p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let g = random_signed_digraph(25, 0.2, 0.75, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));

        let flipped = perturb_signs(&g, p, &mut rng);
        prop_assert!(flipped.validate().is_ok());
        prop_assert_eq!(flipped.num_edges(), g.num_edges());
        let expected_flips = (p * g.num_positive() as f64).floor() as usize + (p * g.num_negative() as f64).floor() as usize;
        let changed = g.edges().filter(|e| flipped.sign(e.src, e.dst) != Some(e.sign)).count();
        prop_assert_eq!(changed, expected_flips);

        let turned = perturb_directions(&g, r, &mut rng);
        prop_assert!(turned.validate().is_ok());
        prop_assert!(turned.num_edges() <= g.num_edges());
        // Every surviving edge is an original edge or the reverse of one, sign kept.
        for e in turned.edges() {
            prop_assert!(g.sign(e.src, e.dst) == Some(e.sign) || g.sign(e.dst, e.src) == Some(e.sign));
        }
    }

    #[test]
    fn views_are_deterministic(seed in any::<u64>()) {
        let g = random_signed_digraph(20, 0.2, 0.7, &mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = PerturbationConfig::default();
        let a = make_views(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = make_views(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
    }
}
