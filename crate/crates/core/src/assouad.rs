//! Tent-function embeddings of snowflaked lines and sequence spaces.
//!
//! The building block is the dyadic family psi_{j,k}(t) = 2^(k*beta-1) *
//! psi(2^k t - j) where psi is the unit tent supported on [-2, 2] and
//! beta = -p/q. Summing |psi_{j,k}(x) - psi_{j,k}(y)|^q over all scales k
//! and shifts j reproduces |x - y|^p up to the two-sided frame constants
//!
//! ```text
//! a(p,q) = 2^(-2q),
//! b(p,q) = 8 * (1/(2^q - 2^p) + 2^(p+q)/(2^p - 1)).
//! ```
//!
//! The infinite scale sum is truncated to a finite window [k_min, k_max]
//! whose discarded contribution is certified against the caller's (radius,
//! min_gap, eps) regime using the geometric tails of the per-scale bounds;
//! the certificate is carried in the window and surfaced in every report.
//!
//! Numerics: multiplying by 2^k is exact in binary floating point, but once
//! |2^k x| passes 2^53 the shift indexes near x stop being representable as
//! f64 (or even i64). Scaled coordinates are therefore kept as an exact
//! integer anchor (i128) plus an exact fractional part, and tent arguments
//! are formed from small anchor differences. Shift indices and flat
//! coordinate indices use i128/u128 throughout; windows certified at small
//! exponents legitimately reach scales where the enumeration exceeds u64.

use crate::lp::SparseSeq;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AssouadError {
    #[error("exponents must satisfy 0 < p < q, got p = {p}, q = {q}")]
    BadExponents { p: f64, q: f64 },
    #[error("no representable window satisfies the requested regime: {reason}")]
    InfeasibleWindow { reason: String },
    #[error("input {x} outside the certified domain [-{radius}, {radius}]")]
    OutOfDomain { x: f64, radius: f64 },
    #[error("flat coordinate index overflows for sequence coordinate {coord}")]
    IndexOverflow { coord: u128 },
}

/// Exact power of two. Valid for the normal range; window certification caps
/// scales long before this matters.
#[inline]
pub(crate) fn pow2i(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        2.0f64.powi(k)
    }
}

/// The unit tent: t+2 on [-2,0], 2-t on [0,2], 0 elsewhere. 1-Lipschitz.
#[inline]
pub fn psi(t: f64) -> f64 {
    if (-2.0..=0.0).contains(&t) {
        t + 2.0
    } else if t > 0.0 && t <= 2.0 {
        2.0 - t
    } else {
        0.0
    }
}

/// A point scaled to dyadic level k, split exactly as 2^k x = anchor + frac
/// with frac in [0, 1). Beyond 2^53 the scaled value is an exact integer,
/// so the split stays exact at every scale.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    anchor: i128,
    frac: f64,
}

const TWO_POW_53: f64 = 9007199254740992.0;

fn scale_point(k: i32, x: f64) -> Scaled {
    let u = pow2i(k) * x;
    debug_assert!(u.is_finite());
    if u.abs() >= TWO_POW_53 {
        Scaled {
            anchor: u as i128,
            frac: 0.0,
        }
    } else {
        let f = u.floor();
        Scaled {
            anchor: f as i128,
            frac: u - f,
        }
    }
}

/// The (p, q) family parameters; beta is pinned to -p/q, the unique choice
/// that makes the lower frame bound scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFamily {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
}

impl PsiFamily {
    pub fn new(p: f64, q: f64) -> Result<Self, AssouadError> {
        if !(p > 0.0 && q > p && q.is_finite()) {
            return Err(AssouadError::BadExponents { p, q });
        }
        Ok(PsiFamily {
            p,
            q,
            beta: -p / q,
        })
    }

    /// Amplitude 2^(k*beta - 1); a single exp2 rounding.
    #[inline]
    fn amplitude(&self, k: i32) -> f64 {
        (k as f64 * self.beta - 1.0).exp2()
    }

    /// Tent value at an anchored scaled point for shift j.
    #[inline]
    fn tent_at(&self, k: i32, j: i128, s: &Scaled) -> f64 {
        let rel = s.anchor - j;
        if !(-2..=1).contains(&rel) {
            return 0.0;
        }
        self.amplitude(k) * psi(rel as f64 + s.frac)
    }

    /// psi_{j,k}(t) = 2^(k*beta - 1) * psi(2^k t - j).
    #[inline]
    pub fn psi_jk(&self, j: i64, k: i32, t: f64) -> f64 {
        self.tent_at(k, j as i128, &scale_point(k, t))
    }
}

/// Closed-form frame constants of the full (untruncated) family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub a: f64,
    pub b: f64,
}

pub fn bound_constants(p: f64, q: f64) -> Result<BoundConstants, AssouadError> {
    if !(p > 0.0 && q > p && q.is_finite()) {
        return Err(AssouadError::BadExponents { p, q });
    }
    let a = (-2.0 * q).exp2();
    let b = 8.0 * (1.0 / (q.exp2() - p.exp2()) + (p + q).exp2() / (p.exp2() - 1.0));
    Ok(BoundConstants { a, b })
}

/// The dyadic scale K of a positive gap d, fixed by 2^-(K+1) <= d <= 2^-K.
fn scale_of(d: f64) -> i64 {
    debug_assert!(d > 0.0 && d.is_finite());
    let mut k = (-d.log2().floor() - 1.0) as i64;
    while pow2i((-k) as i32) < d {
        k -= 1;
    }
    while pow2i((-k - 1) as i32) > d {
        k += 1;
    }
    k
}

/// Discarded-scale coefficient below k_min for a pair at scale cap_k, as a
/// multiple of |s-t|^p (geometric series of the Lipschitz-type bound).
fn tail_low(fam: &PsiFamily, k_min: i64, cap_k: i64) -> f64 {
    let (p, q) = (fam.p, fam.q);
    8.0 * (-q).exp2() * ((q - p) * (k_min - 1 - cap_k) as f64).exp2() / (1.0 - (-(q - p)).exp2())
}

/// Discarded-scale coefficient above k_max for a pair at scale cap_k
/// (geometric series of the amplitude-type bound).
fn tail_high(fam: &PsiFamily, k_max: i64, cap_k: i64) -> f64 {
    let (p, q) = (fam.p, fam.q);
    8.0 * (p + q).exp2() * (p * (cap_k - k_max - 1) as f64).exp2() / (1.0 - (-p).exp2())
}

/// A finite (j, k) index rectangle with a certified relative truncation
/// error for every pair whose gap lies in [min_gap, 2*radius].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingWindow {
    pub k_min: i32,
    pub k_max: i32,
    pub radius: f64,
    pub min_gap: f64,
    pub eps_target: f64,
    /// Certified bound on (discarded sum) / (a * |s-t|^p); at most eps_target.
    pub eps_certified: f64,
    /// Coordinates in the flat enumeration (reports carry this summary
    /// instead of the per-scale shift tables). Serialized as a decimal
    /// string: the count can exceed what a JSON double or u64 holds.
    #[serde(with = "u128_as_string")]
    pub coordinates: u128,
    #[serde(skip, default)]
    j_min: Vec<i128>,
    #[serde(skip, default)]
    offset: Vec<u128>,
}

mod u128_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scales past this leave the comfortable double range (amplitudes and
/// scaled coordinates stay far from overflow).
const MAX_ABS_K: i64 = 900;

pub fn certify_window(
    fam: &PsiFamily,
    radius: f64,
    min_gap: f64,
    eps_target: f64,
) -> Result<EmbeddingWindow, AssouadError> {
    if !(radius > 0.0 && min_gap > 0.0 && min_gap <= 2.0 * radius) {
        return Err(AssouadError::InfeasibleWindow {
            reason: format!("need 0 < min_gap <= 2*radius, got radius {radius}, min_gap {min_gap}"),
        });
    }
    if !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(AssouadError::InfeasibleWindow {
            reason: format!("eps_target {eps_target} outside (0, 1)"),
        });
    }
    let a = bound_constants(fam.p, fam.q)?.a;
    let budget = eps_target * a;

    // Coarsest and finest pair scales in the admissible gap range.
    let cap_lo = scale_of(2.0 * radius);
    let cap_hi = scale_of(min_gap);

    // Witness scale K+1 must stay inside the window for every admissible K.
    let k_min_ceil = cap_lo + 1;
    let k_max_floor = cap_hi + 1;

    let grow = |side_ok: &dyn Fn(i64) -> bool, start: i64, step: i64| -> Option<i64> {
        let mut k = start;
        while !side_ok(k) {
            k += step;
            if k.abs() > MAX_ABS_K {
                return None;
            }
        }
        Some(k)
    };

    // Extend each side until its tail fits half the budget, then shrink
    // greedily while the joint certificate still holds.
    let low_ok = |k: i64| tail_low(fam, k, cap_lo) <= 0.5 * budget;
    let high_ok = |k: i64| tail_high(fam, k, cap_hi) <= 0.5 * budget;
    let mut k_min = grow(&low_ok, k_min_ceil, -1).ok_or_else(|| AssouadError::InfeasibleWindow {
        reason: "low-scale tail cannot meet eps_target within the scale cap".into(),
    })?;
    let mut k_max =
        grow(&high_ok, k_max_floor, 1).ok_or_else(|| AssouadError::InfeasibleWindow {
            reason: "high-scale tail cannot meet eps_target within the scale cap".into(),
        })?;
    while k_min < k_min_ceil
        && tail_low(fam, k_min + 1, cap_lo) + tail_high(fam, k_max, cap_hi) <= budget
    {
        k_min += 1;
    }
    while k_max > k_max_floor
        && tail_low(fam, k_min, cap_lo) + tail_high(fam, k_max - 1, cap_hi) <= budget
    {
        k_max -= 1;
    }

    let eps_certified = (tail_low(fam, k_min, cap_lo) + tail_high(fam, k_max, cap_hi)) / a;

    // Enumerate shift counts per scale. The range is padded by two spare
    // shifts per side: the extra tents vanish identically on [-R, R], and
    // the padding keeps boundary supports inside the stored range even when
    // 2^k * radius rounds. The stored bounds, not the real-arithmetic ideal,
    // define the enumeration.
    let mut j_min = Vec::new();
    let mut offset = Vec::new();
    let mut total: u128 = 0;
    for k in k_min..=k_max {
        let span = pow2i(k as i32) * radius;
        if !span.is_finite() || span >= 1.5e36 {
            return Err(AssouadError::InfeasibleWindow {
                reason: format!("shift range at scale {k} exceeds the index range"),
            });
        }
        let lo = -(span as i128) - 4;
        let hi = (span as i128) + 4;
        j_min.push(lo);
        offset.push(total);
        total = total
            .checked_add((hi - lo + 1) as u128)
            .filter(|&t| t <= u128::MAX / 8)
            .ok_or_else(|| AssouadError::InfeasibleWindow {
                reason: "window coordinate count overflows".into(),
            })?;
    }

    Ok(EmbeddingWindow {
        k_min: k_min as i32,
        k_max: k_max as i32,
        radius,
        min_gap,
        eps_target,
        eps_certified,
        j_min,
        offset,
        coordinates: total,
    })
}

impl EmbeddingWindow {
    pub fn scale_count(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    /// Coordinates in the flat enumeration (k ascending, j ascending).
    pub fn coordinate_count(&self) -> u128 {
        self.coordinates
    }

    fn scale_slot(&self, k: i32) -> usize {
        debug_assert!(k >= self.k_min && k <= self.k_max);
        (k - self.k_min) as usize
    }

    pub fn flat_index(&self, j: i128, k: i32) -> u128 {
        let slot = self.scale_slot(k);
        debug_assert!(j >= self.j_min[slot]);
        self.offset[slot] + (j - self.j_min[slot]) as u128
    }

    fn j_bounds(&self, k: i32) -> (i128, i128) {
        let slot = self.scale_slot(k);
        let lo = self.j_min[slot];
        let count = match self.offset.get(slot + 1) {
            Some(next) => next - self.offset[slot],
            None => self.coordinates - self.offset[slot],
        };
        (lo, lo + count as i128 - 1)
    }
}

/// Shifts whose tent can be non-zero at the scaled point, clipped to the
/// window's stored range for that scale.
fn candidate_shifts(win: &EmbeddingWindow, k: i32, s: &Scaled) -> std::ops::RangeInclusive<i128> {
    let (lo, hi) = win.j_bounds(k);
    (s.anchor - 1).max(lo)..=(s.anchor + 2).min(hi)
}

/// Embed a real number as the window slice of (psi_{j,k}(x) - psi_{j,k}(0)).
pub fn embed_real(
    fam: &PsiFamily,
    win: &EmbeddingWindow,
    x: f64,
) -> Result<SparseSeq, AssouadError> {
    if x.abs() > win.radius {
        return Err(AssouadError::OutOfDomain {
            x,
            radius: win.radius,
        });
    }
    let mut entries = Vec::new();
    for k in win.k_min..=win.k_max {
        let sx = scale_point(k, x);
        let s0 = scale_point(k, 0.0);
        let mut js: Vec<i128> = candidate_shifts(win, k, &sx)
            .chain(candidate_shifts(win, k, &s0))
            .collect();
        js.sort_unstable();
        js.dedup();
        for j in js {
            let v = fam.tent_at(k, j, &sx) - fam.tent_at(k, j, &s0);
            if v != 0.0 {
                entries.push((win.flat_index(j, k), v));
            }
        }
    }
    Ok(SparseSeq::from_sorted_unchecked(entries))
}

/// Sum of |psi_{j,k}(x) - psi_{j,k}(y)|^q over the window, accumulated in
/// ascending (k, j) order. The base-point offsets cancel, so this equals the
/// q-th-power distance between the embedded vectors up to rounding.
pub fn pair_power_sum(fam: &PsiFamily, win: &EmbeddingWindow, x: f64, y: f64) -> f64 {
    let mut acc = 0.0;
    for k in win.k_min..=win.k_max {
        let sx = scale_point(k, x);
        let sy = scale_point(k, y);
        let mut js: Vec<i128> = candidate_shifts(win, k, &sx)
            .chain(candidate_shifts(win, k, &sy))
            .collect();
        js.sort_unstable();
        js.dedup();
        for j in js {
            let d = (fam.tent_at(k, j, &sx) - fam.tent_at(k, j, &sy)).abs();
            if d != 0.0 {
                acc += d.powf(fam.q);
            }
        }
    }
    acc
}

/// The single coordinate the lower-bound argument guarantees: at the witness
/// scale K+1 one tent separates x from y enough that its q-th power alone
/// reaches a(p,q) * |x-y|^p.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowerWitness {
    pub j: i128,
    pub k: i32,
    pub contribution: f64,
    pub floor: f64,
}

pub fn lower_witness(
    fam: &PsiFamily,
    win: &EmbeddingWindow,
    x: f64,
    y: f64,
) -> Option<LowerWitness> {
    if x == y {
        return None;
    }
    let (s, t) = if x < y { (x, y) } else { (y, x) };
    let gap = t - s;
    let cap_k = scale_of(gap);
    let k = cap_k + 1;
    if k < win.k_min as i64 || k > win.k_max as i64 {
        return None;
    }
    let k = k as i32;
    let ss = scale_point(k, s);
    let st = scale_point(k, t);
    // Largest shift whose support holds both points; s then sits in the
    // first quarter of that support, t in the middle half.
    let j_base = ss.anchor + 2;
    let t_at_or_left_of_base = st.anchor < j_base || (st.anchor == j_base && st.frac == 0.0);
    let j = if t_at_or_left_of_base { j_base } else { j_base + 1 };
    let contribution = (fam.tent_at(k, j, &ss) - fam.tent_at(k, j, &st))
        .abs()
        .powf(fam.q);
    let a = (-2.0 * fam.q).exp2();
    Some(LowerWitness {
        j,
        k,
        contribution,
        floor: a * gap.powf(fam.p),
    })
}

/// Embed a finitely supported sequence coordinate-by-coordinate; coordinate i
/// occupies the flat block [i * window_size, (i+1) * window_size).
pub fn embed_seq(
    fam: &PsiFamily,
    win: &EmbeddingWindow,
    x: &SparseSeq,
) -> Result<SparseSeq, AssouadError> {
    let block = win.coordinate_count();
    let mut entries = Vec::new();
    for &(i, v) in x.entries() {
        let base = i
            .checked_mul(block)
            .ok_or(AssouadError::IndexOverflow { coord: i })?;
        let coord = embed_real(fam, win, v)?;
        for &(idx, val) in coord.entries() {
            let flat = base
                .checked_add(idx)
                .ok_or(AssouadError::IndexOverflow { coord: i })?;
            entries.push((flat, val));
        }
    }
    Ok(SparseSeq::from_sorted_unchecked(entries))
}

/// Triple sum over (coordinate, shift, scale) for two sequences: the scalar
/// pair sum per shared coordinate, accumulated in ascending coordinate
/// order. Frames the coordinate-wise embedding the same way the scalar
/// bounds frame a single pair.
pub fn seq_pair_power_sum(
    fam: &PsiFamily,
    win: &EmbeddingWindow,
    x: &SparseSeq,
    y: &SparseSeq,
) -> f64 {
    let mut acc = 0.0;
    for (_, a, b) in x.union_iter(y) {
        if a != b {
            acc += pair_power_sum(fam, win, a, b);
        }
    }
    acc
}

/// Frame-bound verification over a batch of scalar pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairVerification {
    pub pairs: usize,
    /// min over pairs of S / |x-y|^p.
    pub min_ratio: f64,
    /// max over pairs of S / |x-y|^p.
    pub max_ratio: f64,
    pub witness_min: (f64, f64),
    pub witness_max: (f64, f64),
    pub lower_violations: usize,
    pub upper_violations: usize,
}

/// Check (1 - eps) * a * |x-y|^p <= S(x,y) <= b * |x-y|^p for every supplied
/// pair. Pair computations run in parallel; the reduction is a sequential
/// fold over the collected per-pair ratios, so results do not depend on the
/// thread count.
pub fn verify_pairs(
    fam: &PsiFamily,
    win: &EmbeddingWindow,
    pairs: &[(f64, f64)],
) -> Result<PairVerification, AssouadError> {
    let consts = bound_constants(fam.p, fam.q)?;
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|&(x, y)| pair_power_sum(fam, win, x, y) / (x - y).abs().powf(fam.p))
        .collect();
    let lower_floor = (1.0 - win.eps_certified) * consts.a;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut witness_min = (0.0, 0.0);
    let mut witness_max = (0.0, 0.0);
    let mut lower_violations = 0;
    let mut upper_violations = 0;
    for (i, &r) in ratios.iter().enumerate() {
        if r < min_ratio {
            min_ratio = r;
            witness_min = pairs[i];
        }
        if r > max_ratio {
            max_ratio = r;
            witness_max = pairs[i];
        }
        if r < lower_floor {
            lower_violations += 1;
        }
        if r > consts.b {
            upper_violations += 1;
        }
    }
    Ok(PairVerification {
        pairs: pairs.len(),
        min_ratio,
        max_ratio,
        witness_min,
        witness_max,
        lower_violations,
        upper_violations,
    })
}
