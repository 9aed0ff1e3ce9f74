//! Seeded generators for experiment inputs and tests.
//!
//! Everything here is a pure function of its seed via the counter-based
//! generator, so fixtures are identical across runs and thread counts.

use crate::lp::{SparseSeq, StepFunction};
use crate::metric::{FiniteMetricSpace, Validity};
use crate::rng::KeyedRng;

/// Symmetric matrix with off-diagonal entries uniform in [1, 2]; any such
/// matrix satisfies the triangle inequality outright.
#[allow(clippy::needless_range_loop)]
pub fn uniform_metric(n: usize, seed: u64) -> FiniteMetricSpace {
    let rng = KeyedRng::new(seed).fork(0x756e);
    let mut rows = vec![vec![0.0; n]; n];
    let mut counter = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rng.f64_in(counter, 1.0, 2.0);
            counter += 1;
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    FiniteMetricSpace::validate(&rows, Validity::Metric).expect("shifted uniforms form a metric")
}

/// Euclidean distances between n random points in the unit cube of the
/// given dimension; richer near-degenerate structure than `uniform_metric`.
pub fn euclidean_metric(n: usize, dim: usize, seed: u64) -> FiniteMetricSpace {
    let rng = KeyedRng::new(seed).fork(0x6575);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| rng.f64_at((i * dim + d) as u64))
                .collect()
        })
        .collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    FiniteMetricSpace::validate(&rows, Validity::Metric).expect("euclidean distances form a metric")
}

/// Ultrametric from a random binary hierarchy: distance between two points
/// is the height of their lowest common ancestor, and heights shrink
/// strictly toward the leaves.
pub fn hierarchy_ultrametric(n: usize, seed: u64) -> FiniteMetricSpace {
    assert!(n >= 1);
    let rng = KeyedRng::new(seed).fork(0x756c74);
    let mut rows = vec![vec![0.0; n]; n];
    let mut indices: Vec<usize> = (0..n).collect();
    let root_height = rng.f64_in(0, 1.0, 2.0);
    let mut node = 1u64;
    split(&rng, &mut rows, &mut indices, root_height, &mut node);
    FiniteMetricSpace::validate(&rows, Validity::Ultrametric)
        .expect("hierarchy heights form an ultrametric")
}

fn split(
    rng: &KeyedRng,
    rows: &mut [Vec<f64>],
    members: &mut [usize],
    height: f64,
    node: &mut u64,
) {
    if members.len() < 2 {
        return;
    }
    let lane = rng.fork(*node);
    *node += 1;
    // Keyed Fisher-Yates, then a split point leaving both sides nonempty.
    for i in (1..members.len()).rev() {
        members.swap(i, lane.index_at(i as u64, i + 1));
    }
    let cut = 1 + lane.index_at(u64::MAX - 7, members.len() - 1);
    let (left, right) = members.split_at_mut(cut);
    for &a in left.iter() {
        for &b in right.iter() {
            rows[a][b] = height;
            rows[b][a] = height;
        }
    }
    let shrink_l = lane.f64_in(u64::MAX - 1, 0.5, 0.9);
    let shrink_r = lane.f64_in(u64::MAX - 2, 0.5, 0.9);
    split(rng, rows, left, height * shrink_l, node);
    split(rng, rows, right, height * shrink_r, node);
}

/// Step function with `cells` cells, breakpoints on a fine lattice (so
/// cross-checks against sampled oracles stay exact) and values in [lo, hi].
pub fn step_function(cells: usize, lo: f64, hi: f64, seed: u64) -> StepFunction {
    assert!(cells >= 1);
    let rng = KeyedRng::new(seed).fork(0x7374);
    let lattice = 1_000_000u64;
    let mut cuts: Vec<u64> = Vec::with_capacity(cells - 1);
    let mut counter = 0u64;
    while cuts.len() < cells - 1 {
        let c = 1 + rng.u64_at(counter) % (lattice - 1);
        counter += 1;
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut breaks = Vec::with_capacity(cells + 1);
    breaks.push(0.0);
    breaks.extend(cuts.iter().map(|&c| c as f64 / lattice as f64));
    breaks.push(1.0);
    let values = (0..cells)
        .map(|i| rng.f64_in(1_000_000 + i as u64, lo, hi))
        .collect();
    StepFunction::new(breaks, values).expect("lattice breakpoints are strictly increasing")
}

/// Sparse sequence with `support` entries at indices drawn from [0, span)
/// and values in [lo, hi].
pub fn sparse_seq(support: usize, span: u64, lo: f64, hi: f64, seed: u64) -> SparseSeq {
    let rng = KeyedRng::new(seed).fork(0x7370);
    let mut idx: Vec<u64> = Vec::with_capacity(support);
    let mut counter = 0u64;
    while idx.len() < support {
        let i = rng.u64_at(counter) % span;
        counter += 1;
        if !idx.contains(&i) {
            idx.push(i);
        }
    }
    let pairs: Vec<(u128, f64)> = idx
        .into_iter()
        .enumerate()
        .map(|(slot, i)| {
            let mut v = rng.f64_in(1_000 + slot as u64, lo, hi);
            if v == 0.0 {
                v = 0.5 * (lo + hi);
            }
            (i as u128, v)
        })
        .collect();
    SparseSeq::from_pairs(pairs).expect("finite values")
}

/// A seeded permutation of 0..n (keyed Fisher-Yates).
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let rng = KeyedRng::new(seed).fork(0x7065);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.index_at(i as u64, i + 1));
    }
    perm
}
