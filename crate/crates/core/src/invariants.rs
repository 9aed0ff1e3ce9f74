//! Enflo-type and roundness machinery on finite metric spaces.
//!
//! Both invariants compare power sums over a combinatorial witness: for an
//! n-cube the diagonals against the edges, for a quadruple the two
//! "diagonal" legs against the four-cycle. The defect (left side minus
//! right side at constant 1) is nonpositive at exponent 1 by the triangle
//! inequality; the per-witness critical exponent is the first p where it
//! turns positive. Space-level routines scan witnesses exhaustively (or by
//! seeded sampling when the count explodes) and report the minimum critical
//! exponent with its witness — a certified upper bound for the supremum
//! invariant, never a lower bound.

use crate::extreal::ExtReal;
use crate::metric::{distortion, FiniteMetricSpace, MetricError, PointMap};
use crate::rng::KeyedRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InvariantsError {
    #[error("invalid cube: {reason}")]
    InvalidCube { reason: String },
    #[error("defect at p = 1 is {defect} > tolerance {tol}; the space is not a valid metric")]
    SanityFailure { defect: f64, tol: f64 },
    #[error("bad scan parameters: {reason}")]
    BadParams { reason: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// An n-dimensional combinatorial cube: one point index per sign vector,
/// repeats allowed. Slot order is the bitmask of the sign vector (bit i set
/// means coordinate i is +1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeAssignment {
    pub n: u32,
    pub vertex: Vec<usize>,
}

impl CubeAssignment {
    pub fn new(n: u32, vertex: Vec<usize>, space_points: usize) -> Result<Self, InvariantsError> {
        if n == 0 || n > 20 {
            return Err(InvariantsError::InvalidCube {
                reason: format!("dimension {n} outside 1..=20"),
            });
        }
        if vertex.len() != 1usize << n {
            return Err(InvariantsError::InvalidCube {
                reason: format!("expected {} vertices, got {}", 1usize << n, vertex.len()),
            });
        }
        if let Some(&bad) = vertex.iter().find(|&&v| v >= space_points) {
            return Err(InvariantsError::InvalidCube {
                reason: format!("vertex index {bad} out of range for {space_points} points"),
            });
        }
        Ok(CubeAssignment { n, vertex })
    }

    /// The 2^(n-1) diagonals: sign vectors opposite in every coordinate.
    pub fn diagonals(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let full = (1usize << self.n) - 1;
        (0..(1usize << (self.n - 1))).map(move |m| (self.vertex[m], self.vertex[full ^ m]))
    }

    /// The n * 2^(n-1) edges: sign vectors differing in one coordinate.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..(1usize << n)).flat_map(move |m| {
            (0..n)
                .filter(move |i| m & (1 << i) == 0)
                .map(move |i| (self.vertex[m], self.vertex[m | (1 << i)]))
        })
    }
}

/// Diagonal and edge power sums of a cube at exponent p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeSums {
    pub diag: f64,
    pub edge: f64,
}

pub fn cube_sums(space: &FiniteMetricSpace, cube: &CubeAssignment, p: f64) -> CubeSums {
    let pow = |d: f64| if d == 0.0 { 0.0 } else { d.powf(p) };
    let diag = cube.diagonals().map(|(a, b)| pow(space.dist(a, b))).sum();
    let edge = cube.edges().map(|(a, b)| pow(space.dist(a, b))).sum();
    CubeSums { diag, edge }
}

/// diag_sum(p) - K^p * edge_sum(p); nonpositive means the cube satisfies the
/// type-p inequality with constant K.
pub fn enflo_defect(space: &FiniteMetricSpace, cube: &CubeAssignment, p: f64, k: f64) -> f64 {
    let sums = cube_sums(space, cube, p);
    sums.diag - k.powf(p) * sums.edge
}

/// d13^p + d24^p - (d12^p + d23^p + d34^p + d41^p).
pub fn roundness_defect(space: &FiniteMetricSpace, quad: (usize, usize, usize, usize), p: f64) -> f64 {
    let (a1, a2, a3, a4) = quad;
    let pow = |d: f64| if d == 0.0 { 0.0 } else { d.powf(p) };
    pow(space.dist(a1, a3)) + pow(space.dist(a2, a4))
        - (pow(space.dist(a1, a2))
            + pow(space.dist(a2, a3))
            + pow(space.dist(a3, a4))
            + pow(space.dist(a4, a1)))
}

/// Result of a critical-exponent scan for one witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    /// Every sign change found on the grid, bisected to width `tol`.
    pub crossings: Vec<f64>,
    /// First crossing from nonpositive to positive; +inf sentinel when no
    /// violation was found below `p_cap` (that is evidence, not proof, of
    /// validity for all p — except where ultrametric theory guarantees it).
    pub critical: ExtReal,
    pub p_cap: f64,
}

/// Scan a defect function over a geometric grid on [1, p_cap], bisecting
/// every sign change to width `tol`. The defect need not be monotone; every
/// crossing is reported and the critical exponent is conservatively the
/// first upward one.
pub fn critical_exponent(
    defect: impl Fn(f64) -> f64,
    p_cap: f64,
    grid: usize,
    tol: f64,
) -> Result<CriticalScan, InvariantsError> {
    // Negated comparisons so NaN parameters are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(p_cap > 1.0) || grid < 16 || !(tol > 0.0) {
        return Err(InvariantsError::BadParams {
            reason: format!("need p_cap > 1, grid >= 16, tol > 0; got {p_cap}, {grid}, {tol}"),
        });
    }
    let d1 = defect(1.0);
    if d1 > tol {
        return Err(InvariantsError::SanityFailure { defect: d1, tol });
    }

    let step = p_cap.ln() / (grid - 1) as f64;
    let grid_point = |i: usize| (i as f64 * step).exp();
    let mut crossings = Vec::new();
    let mut critical = None;
    let mut prev_p = 1.0;
    let mut prev_pos = d1 > 0.0;
    for i in 1..grid {
        let p = if i == grid - 1 { p_cap } else { grid_point(i) };
        let pos = defect(p) > 0.0;
        if pos != prev_pos {
            let (mut lo, mut hi) = (prev_p, p);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if (defect(mid) > 0.0) == prev_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            crossings.push(root);
            if !prev_pos && critical.is_none() {
                critical = Some(root);
            }
        }
        prev_p = p;
        prev_pos = pos;
    }
    Ok(CriticalScan {
        crossings,
        critical: critical.map_or(ExtReal::PosInf, ExtReal::Finite),
        p_cap,
    })
}

/// The witness a space-level report points at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Quad { indices: [usize; 4] },
    Cube { n: u32, vertex: Vec<usize> },
}

/// Space-level aggregate: the minimum critical exponent over examined
/// witnesses, with the witness itself and its full crossing list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponentReport {
    pub witness: Option<Witness>,
    pub crossings: Vec<f64>,
    pub critical: ExtReal,
    pub p_cap: f64,
    /// False when random sampling replaced exhaustion, making the bound
    /// lower-confidence.
    pub exhaustive: bool,
}

pub fn quad_critical(
    space: &FiniteMetricSpace,
    quad: (usize, usize, usize, usize),
    p_cap: f64,
    grid: usize,
    tol: f64,
) -> Result<CriticalScan, InvariantsError> {
    critical_exponent(|p| roundness_defect(space, quad, p), p_cap, grid, tol)
}

pub fn cube_critical(
    space: &FiniteMetricSpace,
    cube: &CubeAssignment,
    p_cap: f64,
    grid: usize,
    tol: f64,
) -> Result<CriticalScan, InvariantsError> {
    critical_exponent(|p| enflo_defect(space, cube, p, 1.0), p_cap, grid, tol)
}

fn quad_of_rank(n: usize, rank: usize) -> (usize, usize, usize, usize) {
    (
        rank / (n * n * n),
        (rank / (n * n)) % n,
        (rank / n) % n,
        rank % n,
    )
}

/// Exhaustive roundness scan over all ordered quadruples (repeats allowed).
pub fn space_roundness(
    space: &FiniteMetricSpace,
    p_cap: f64,
    grid: usize,
    tol: f64,
) -> Result<CriticalExponentReport, InvariantsError> {
    let n = space.n();
    if n == 0 {
        return Err(InvariantsError::BadParams {
            reason: "empty space".into(),
        });
    }
    let total = n * n * n * n;
    let criticals: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .map(|rank| {
            let quad = quad_of_rank(n, rank);
            match quad_critical(space, quad, p_cap, grid, tol) {
                Ok(scan) => match scan.critical {
                    ExtReal::Finite(c) => Ok(Some(c)),
                    ExtReal::PosInf => Ok(None),
                },
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, _>>()?;
    let mut best: Option<(f64, usize)> = None;
    for (rank, c) in criticals.iter().enumerate() {
        if let Some(c) = c {
            if best.is_none_or(|(bc, _)| *c < bc) {
                best = Some((*c, rank));
            }
        }
    }
    match best {
        Some((_, rank)) => {
            let quad = quad_of_rank(n, rank);
            let scan = quad_critical(space, quad, p_cap, grid, tol)?;
            Ok(CriticalExponentReport {
                witness: Some(Witness::Quad {
                    indices: [quad.0, quad.1, quad.2, quad.3],
                }),
                crossings: scan.crossings,
                critical: scan.critical,
                p_cap,
                exhaustive: true,
            })
        }
        None => Ok(CriticalExponentReport {
            witness: None,
            crossings: Vec::new(),
            critical: ExtReal::PosInf,
            p_cap,
            exhaustive: true,
        }),
    }
}

fn cube_of_rank(n_points: usize, dim: u32, mut rank: u128) -> CubeAssignment {
    let slots = 1usize << dim;
    let mut vertex = vec![0usize; slots];
    for v in vertex.iter_mut() {
        *v = (rank % n_points as u128) as usize;
        rank /= n_points as u128;
    }
    CubeAssignment { n: dim, vertex }
}

fn random_cube(rng: &KeyedRng, n_points: usize, dim: u32, sample: u64) -> CubeAssignment {
    let lane = rng.fork(dim as u64).fork(sample);
    let slots = 1usize << dim;
    let vertex = (0..slots).map(|s| lane.index_at(s as u64, n_points)).collect();
    CubeAssignment { n: dim, vertex }
}

/// Enflo-type scan over cube dimensions 1..=n_max with constant K = 1.
/// Dimensions whose assignment count exceeds `budget` are sampled with the
/// counter-based generator keyed by (seed, dimension, sample index), so the
/// examined set is identical for any thread count.
pub fn space_enflo(
    space: &FiniteMetricSpace,
    n_max: u32,
    p_cap: f64,
    grid: usize,
    tol: f64,
    budget: u64,
    seed: u64,
) -> Result<CriticalExponentReport, InvariantsError> {
    let n_points = space.n();
    if n_points == 0 || n_max == 0 || n_max > 16 {
        return Err(InvariantsError::BadParams {
            reason: format!("need a nonempty space and 1 <= n_max <= 16, got n_max {n_max}"),
        });
    }
    let rng = KeyedRng::new(seed);
    let mut best: Option<(f64, CubeAssignment)> = None;
    let mut exhaustive = true;
    for dim in 1..=n_max {
        let slots = 1u32 << dim;
        let count = (n_points as u128).checked_pow(slots).unwrap_or(u128::MAX);
        let cubes: Vec<CubeAssignment> = if count <= budget as u128 {
            (0..count as u64)
                .map(|rank| cube_of_rank(n_points, dim, rank as u128))
                .collect()
        } else {
            exhaustive = false;
            (0..budget)
                .map(|sample| random_cube(&rng, n_points, dim, sample))
                .collect()
        };
        let criticals: Vec<Option<f64>> = cubes
            .par_iter()
            .map(|cube| match cube_critical(space, cube, p_cap, grid, tol) {
                Ok(scan) => match scan.critical {
                    ExtReal::Finite(c) => Ok(Some(c)),
                    ExtReal::PosInf => Ok(None),
                },
                Err(e) => Err(e),
            })
            .collect::<Result<_, _>>()?;
        for (cube, c) in cubes.into_iter().zip(criticals) {
            if let Some(c) = c {
                if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                    best = Some((c, cube));
                }
            }
        }
    }
    match best {
        Some((_, cube)) => {
            let scan = cube_critical(space, &cube, p_cap, grid, tol)?;
            Ok(CriticalExponentReport {
                witness: Some(Witness::Cube {
                    n: cube.n,
                    vertex: cube.vertex.clone(),
                }),
                crossings: scan.crossings,
                critical: scan.critical,
                p_cap,
                exhaustive,
            })
        }
        None => Ok(CriticalExponentReport {
            witness: None,
            crossings: Vec::new(),
            critical: ExtReal::PosInf,
            p_cap,
            exhaustive,
        }),
    }
}

/// Witness-level Lipschitz transfer: if the image cube satisfies the type-p
/// inequality with its own optimal constant K, the source cube must satisfy
/// it with K*A*B, where (A, B) are the sharp frame constants of the map.
/// Returns whether that conclusion holds (it must for injective maps).
pub fn transfer_check(
    map: &PointMap,
    cube: &CubeAssignment,
    p: f64,
) -> Result<bool, InvariantsError> {
    if cube.vertex.iter().any(|&v| v >= map.source.n()) {
        return Err(InvariantsError::InvalidCube {
            reason: "cube indices exceed the map's source".into(),
        });
    }
    let rep = distortion(map)?;
    let (a, b) = match (rep.a, rep.b) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a, b),
        // A collapsed pair means the premise constant is unbounded and the
        // implication is vacuous.
        _ => return Ok(true),
    };
    let pow = |d: f64| if d == 0.0 { 0.0 } else { d.powf(p) };
    let mut diag_img = 0.0;
    let mut diag_src = 0.0;
    for (u, v) in cube.diagonals() {
        diag_img += pow(map.target.dist(map.image[u], map.image[v]));
        diag_src += pow(map.source.dist(u, v));
    }
    let mut edge_img = 0.0;
    let mut edge_src = 0.0;
    for (u, v) in cube.edges() {
        edge_img += pow(map.target.dist(map.image[u], map.image[v]));
        edge_src += pow(map.source.dist(u, v));
    }
    if edge_img == 0.0 {
        // Injective maps only collapse edges whose source length is zero, so
        // the cube is degenerate and the inequality is trivial.
        return Ok(diag_src <= 1e-12);
    }
    // Tight premise: K^p = diag_img / edge_img.
    let k_pow = diag_img / edge_img;
    let rhs = k_pow * a.powf(p) * b.powf(p) * edge_src;
    Ok(diag_src <= rhs * (1.0 + 1e-12) + 1e-300)
}
