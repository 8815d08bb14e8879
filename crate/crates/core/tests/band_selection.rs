use num_complex::Complex64;
use rand::Rng;
use specx_core::bands::{
    blocks_of, invert_rem, mask_comm, struct_omp, BandConstraints, MappingMatrix, RemGrid,
};
use specx_core::rng::rng_from_seed;
use specx_core::{Error, FrequencyInterval, FrequencySet};
use specx_oracles::{enumerate_block_supports, residual_energy};

fn span(p: usize) -> FrequencyInterval {
    FrequencyInterval::new(0.0, p as f64).unwrap()
}

fn admissible(s: &[usize], c: &BandConstraints) -> bool {
    let b = blocks_of(s);
    c.max_block_len
        .is_none_or(|m| b.iter().all(|x| x.1 - x.0 < m))
        && c.min_separation
            .is_none_or(|m| b.windows(2).all(|w| w[1].0 - w[0].1 > m))
}

/// Fraction of feasible supports with a strictly smaller residual.
fn rank(
    y_inv: &[f64],
    d: &MappingMatrix,
    n_b: usize,
    c: &BandConstraints,
    chosen: &[usize],
) -> f64 {
    let cols: Vec<Vec<Complex64>> = (0..d.p())
        .map(|j| {
            (0..d.q())
                .map(|i| Complex64::new(if d.row_of(j) == i { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let y = vec![y_inv
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect::<Vec<_>>()];
    let ours = residual_energy(&cols, &y, chosen);
    let feasible: Vec<Vec<usize>> = enumerate_block_supports(d.p(), n_b)
        .into_iter()
        .filter(|s| s.iter().all(|&j| y_inv[d.row_of(j)] > 0.0) && admissible(s, c))
        .collect();
    let better = feasible
        .iter()
        .filter(|s| residual_energy(&cols, &y, s) < ours - 1e-12)
        .count();
    better as f64 / feasible.len() as f64
}

#[test]
fn greedy_selection_ranks_near_the_top_of_all_supports() {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..300u64 {
        let mut rng = rng_from_seed(seed);
        let p = rng.random_range(6..=12);
        let divisors: Vec<usize> = (1..=p).filter(|q| p % q == 0 && *q >= 2).collect();
        let q = divisors[rng.random_range(0..divisors.len())];
        let d = MappingMatrix::uniform(q, p).unwrap();
        let y: Vec<f64> = (0..q)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        let n_b = rng.random_range(1..=4);
        let c = BandConstraints {
            max_block_len: rng.random_bool(0.5).then(|| rng.random_range(1..=p / 2)),
            min_separation: None,
        };
        match struct_omp(&y, &d, n_b, &span(p), &c) {
            Ok(sel) => {
                let s = sel.support();
                assert!(blocks_of(&s).len() <= n_b);
                assert!(admissible(&s, &c));
                let r = rank(&y, &d, n_b, &c, &s);
                worst = worst.max(r);
                checked += 1;
            }
            Err(Error::InsufficientBlocks { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(checked > 200, "only {checked} instances were feasible");
    assert!(worst <= 0.05, "worst rank {worst:.4}");
}

#[test]
fn selected_bands_avoid_masked_comm() {
    let p = 40;
    let sp = FrequencyInterval::new(-20.0, 20.0).unwrap();
    for seed in 0..2000u64 {
        let mut rng = rng_from_seed(50_000 + seed);
        let y: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..100.0)).collect();
        let pairs: Vec<[f64; 2]> = (0..rng.random_range(0..5))
            .map(|_| {
                let lo = rng.random_range(-20.0..18.0);
                [lo, lo + rng.random_range(0.1..6.0)]
            })
            .collect();
        let f_c = FrequencySet::from_pairs(&pairs).unwrap();
        let rem = RemGrid::new(y, sp).unwrap();
        let y_inv = invert_rem(&mask_comm(&rem, &f_c).floored(1e-6)).unwrap();
        let d = MappingMatrix::identity(p);
        match struct_omp(&y_inv, &d, 4, &sp, &BandConstraints::default()) {
            Ok(sel) => {
                assert!(
                    !sel.f_r.intersects(&f_c),
                    "seed {seed}: {} meets {}",
                    sel.f_r,
                    f_c
                );
                assert!(sel.f_r.len() <= 4);
            }
            Err(Error::InsufficientBlocks { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}
