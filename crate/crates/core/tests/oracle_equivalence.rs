use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subiso::coloring::Coloring;
use subiso::dp::{run_iteration, DpContext, Limits};
use subiso::graph::{all_pairs_distances, degree_filter, erdos_renyi, MappingMask};
use subiso::oracle::{brute_force_all, brute_force_colorful};
use subiso::reconstruct::{enumerate_occurrences, reconstruct_root};
use subiso::treedecomp::NiceTreeDecomposition;
use subiso::{solve, Mode, SolveOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn dp_matches_colorful_oracle(
        n_g in 1usize..=11,
        n_f in 1usize..=5,
        p in 0.1f64..1.0,
        q in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let g = erdos_renyi(n_g, p, seed);
        let f = erdos_renyi(n_f, q, seed ^ 0xabcd);
        let coloring = Coloring::random(n_g, n_f, &mut ChaCha8Rng::seed_from_u64(seed));
        let (ntd, _) = NiceTreeDecomposition::for_pattern(&f).unwrap();
        let distances = all_pairs_distances(&f).unwrap();
        let mask = degree_filter(&g, &f, &MappingMask::all(n_g, n_f));
        let ctx = DpContext { target: &g, pattern: &f, mask: &mask, distances: &distances, coloring: &coloring };
        let it = run_iteration(&ntd, &ctx, Limits::default()).unwrap();
        let r = reconstruct_root(&ntd, &it, &coloring, n_f, usize::MAX, Limits::default()).unwrap();
        let got = enumerate_occurrences(&r, Mode::AllMappings, usize::MAX);
        let expected = brute_force_colorful(&g, &f, &coloring);
        prop_assert_eq!(got.sorted_keys(), expected.sorted_keys());
        prop_assert_eq!(r.count(0), expected.len() as u128);
        prop_assert_eq!(it.found(), !expected.is_empty());
    }

    #[test]
    fn solve_is_sound_and_respects_cap(
        n_g in 3usize..=10,
        n_f in 2usize..=4,
        p in 0.2f64..1.0,
        seed in any::<u64>(),
        cap in 1usize..20,
    ) {
        let g = erdos_renyi(n_g, p, seed);
        let f = erdos_renyi(n_f, 0.7, seed.rotate_left(7));
        let all = brute_force_all(&g, &f);
        let opts = SolveOptions { seed, max_results: cap, iterations: Some(8), ..Default::default() };
        let sol = solve(&g, &f, None, &opts).unwrap();
        prop_assert!(sol.occurrences.len() <= cap);
        for m in sol.occurrences.iter() {
            prop_assert!(all.contains(m));
        }
    }

    #[test]
    fn masks_are_respected(n_g in 3usize..=9, seed in any::<u64>()) {
        let g = erdos_renyi(n_g, 0.6, seed);
        let f = erdos_renyi(3, 0.8, seed ^ 1);
        let bits: Vec<u32> = (0..n_g).map(|v| ((seed >> (v % 60)) as u32 & 0b111) | 0b1000).collect();
        let mask = MappingMask::from_bits(bits.clone());
        let opts = SolveOptions { seed, epsilon: 0.01, ..Default::default() };
        let sol = solve(&g, &f, Some(&mask), &opts).unwrap();
        for m in sol.occurrences.iter() {
            for (u, &x) in m.iter().enumerate() {
                prop_assert!(bits[x as usize] >> u & 1 == 1);
            }
        }
    }
}
