use evalkit::dtw::euclidean;
use evalkit::{dtw_align, DtwOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum cost over every monotone path, by exhaustive enumeration.
fn brute_force(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    fn walk(x: &[Vec<f64>], y: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + euclidean(&x[i], &y[j]);
        if i + 1 == x.len() && j + 1 == y.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc, best);
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, 0.0, &mut best);
    best
}

fn path_cost(x: &[Vec<f64>], y: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| euclidean(&x[i], &y[j])).sum()
}

fn random_seq(rng: &mut ChaCha8Rng, t: usize, d: usize) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn dtw_matches_exhaustive_search_on_all_small_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut shapes = 0;
    for t1 in 1..=64 {
        for t2 in 1..=64 / t1 {
            shapes += 1;
            for d in [1, 3] {
                let x = random_seq(&mut rng, t1, d);
                let y = random_seq(&mut rng, t2, d);
                let p = dtw_align(&x, &y, DtwOptions::default()).unwrap();
                assert!(p.is_valid(t1, t2), "{t1}x{t2}");
                let oracle = brute_force(&x, &y);
                assert!((p.cost - oracle).abs() < 1e-9, "{t1}x{t2}: {} vs {oracle}", p.cost);
                assert!((path_cost(&x, &y, &p.pairs) - p.cost).abs() < 1e-9);
            }
        }
    }
    assert_eq!(shapes, (1..=64).map(|t| 64 / t).sum::<usize>());
}

proptest! {
    #[test]
    fn cost_is_symmetric(seed in 0u64..1000, t1 in 1usize..20, t2 in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_seq(&mut rng, t1, 4);
        let y = random_seq(&mut rng, t2, 4);
        let a = dtw_align(&x, &y, DtwOptions::default()).unwrap();
        let b = dtw_align(&y, &x, DtwOptions::default()).unwrap();
        prop_assert!((a.cost - b.cost).abs() < 1e-9);
    }

    #[test]
    fn self_alignment_is_free(seed in 0u64..1000, t in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_seq(&mut rng, t, 4);
        let p = dtw_align(&x, &x, DtwOptions::default()).unwrap();
        prop_assert_eq!(p.cost, 0.0);
        prop_assert_eq!(p.pairs, (0..t).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn band_never_beats_the_free_path(seed in 0u64..1000, t1 in 2usize..30, t2 in 2usize..30, band in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_seq(&mut rng, t1, 2);
        let y = random_seq(&mut rng, t2, 2);
        let free = dtw_align(&x, &y, DtwOptions::default()).unwrap();
        let banded = dtw_align(&x, &y, DtwOptions { band: Some(band) }).unwrap();
        prop_assert!(banded.is_valid(t1, t2));
        prop_assert!(banded.cost >= free.cost - 1e-9);
    }
}
