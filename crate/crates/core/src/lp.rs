//! Discretized sequence-space and function-space metrics.
//!
//! Sequence elements are finitely supported (`SparseSeq`), function elements
//! are piecewise constant on [0,1] (`StepFunction`). For exponent p the
//! distance is the plain p-th power sum/integral when p <= 1 and the usual
//! norm metric when p >= 1; both are exact for these representations, no
//! quadrature is involved.
//!
//! Also houses the sign-indicator embedding of L1 into L2, which squares
//! norms exactly on step functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("exponent must be positive, got {p}")]
    NonPositiveExponent { p: f64 },
    #[error("breakpoints must start at 0, end at 1, and be strictly increasing")]
    BadBreakpoints,
    #[error("expected {expected} cell values, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("sequence entries must have strictly increasing indices")]
    UnsortedEntries,
    #[error("value at index {index} is not finite")]
    NonFiniteValue { index: u128 },
}

/// Which metric an exponent induces: p-th power sums below 1, norm at and
/// above 1 (the two readings agree at p = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Fspace,
    Banach,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PExponent {
    p: f64,
    regime: Regime,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self, LpError> {
        // Negated comparison so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(p > 0.0) || !p.is_finite() {
            return Err(LpError::NonPositiveExponent { p });
        }
        let regime = if p < 1.0 { Regime::Fspace } else { Regime::Banach };
        Ok(PExponent { p, regime })
    }

    pub fn value(&self) -> f64 {
        self.p
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Turn a p-th power mass into the metric value for this regime.
    #[inline]
    fn finish(&self, power_sum: f64) -> f64 {
        match self.regime {
            Regime::Fspace => power_sum,
            Regime::Banach => {
                if self.p == 1.0 {
                    power_sum
                } else {
                    power_sum.powf(1.0 / self.p)
                }
            }
        }
    }
}

/// A finitely supported real sequence: sorted (index, value) pairs, no zeros.
/// The JSON form is `{"entries": [[index, value], ...]}`; deserialization
/// canonicalizes (sorts, merges duplicates, drops zeros).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SparseSeqRaw")]
pub struct SparseSeq {
    entries: Vec<(u128, f64)>,
}

#[derive(Deserialize)]
struct SparseSeqRaw {
    entries: Vec<(u128, f64)>,
}

impl TryFrom<SparseSeqRaw> for SparseSeq {
    type Error = LpError;
    fn try_from(raw: SparseSeqRaw) -> Result<Self, LpError> {
        SparseSeq::from_pairs(raw.entries)
    }
}

impl SparseSeq {
    pub fn zero() -> Self {
        SparseSeq { entries: Vec::new() }
    }

    /// Canonicalize: sort by index, sum duplicates, drop zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u128, f64)>) -> Result<Self, LpError> {
        let mut v: Vec<(u128, f64)> = pairs.into_iter().collect();
        for &(index, value) in &v {
            if !value.is_finite() {
                return Err(LpError::NonFiniteValue { index });
            }
        }
        v.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u128, f64)> = Vec::with_capacity(v.len());
        for (i, x) in v {
            match entries.last_mut() {
                Some((j, y)) if *j == i => *y += x,
                _ => entries.push((i, x)),
            }
        }
        entries.retain(|&(_, x)| x != 0.0);
        Ok(SparseSeq { entries })
    }

    /// Trusted constructor: entries already strictly sorted and nonzero.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(u128, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, x)| x != 0.0));
        SparseSeq { entries }
    }

    pub fn unit(index: u128) -> Self {
        SparseSeq {
            entries: vec![(index, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(u128, f64)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: u128) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Iterate (index, self_value, other_value) over the union of supports in
    /// ascending index order.
    pub fn union_iter<'a>(
        &'a self,
        other: &'a SparseSeq,
    ) -> impl Iterator<Item = (u128, f64, f64)> + 'a {
        UnionIter {
            a: &self.entries,
            b: &other.entries,
            ia: 0,
            ib: 0,
        }
    }
}

struct UnionIter<'a> {
    a: &'a [(u128, f64)],
    b: &'a [(u128, f64)],
    ia: usize,
    ib: usize,
}

impl Iterator for UnionIter<'_> {
    type Item = (u128, f64, f64);
    fn next(&mut self) -> Option<Self::Item> {
        match (self.a.get(self.ia), self.b.get(self.ib)) {
            (None, None) => None,
            (Some(&(i, x)), None) => {
                self.ia += 1;
                Some((i, x, 0.0))
            }
            (None, Some(&(j, y))) => {
                self.ib += 1;
                Some((j, 0.0, y))
            }
            (Some(&(i, x)), Some(&(j, y))) => {
                if i < j {
                    self.ia += 1;
                    Some((i, x, 0.0))
                } else if j < i {
                    self.ib += 1;
                    Some((j, 0.0, y))
                } else {
                    self.ia += 1;
                    self.ib += 1;
                    Some((i, x, y))
                }
            }
        }
    }
}

/// Sum_i |x_i - y_i|^p over the union of supports, left to right.
pub fn seq_power_sum(x: &SparseSeq, y: &SparseSeq, p: f64) -> f64 {
    let mut acc = 0.0;
    for (_, a, b) in x.union_iter(y) {
        let d = (a - b).abs();
        if d != 0.0 {
            acc += d.powf(p);
        }
    }
    acc
}

/// The sequence-space distance for either regime of the exponent.
pub fn dist_lp(x: &SparseSeq, y: &SparseSeq, p: PExponent) -> f64 {
    p.finish(seq_power_sum(x, y, p.value()))
}

/// A piecewise-constant function on [0,1]. The JSON form is
/// `{"breaks": [...], "values": [...]}`; deserialization enforces the grid
/// invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRaw")]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepFunctionRaw {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepFunctionRaw> for StepFunction {
    type Error = LpError;
    fn try_from(raw: StepFunctionRaw) -> Result<Self, LpError> {
        StepFunction::new(raw.breaks, raw.values)
    }
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, LpError> {
        if breaks.len() < 2
            || breaks[0] != 0.0
            || *breaks.last().unwrap() != 1.0
            || breaks.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(LpError::BadBreakpoints);
        }
        if values.len() != breaks.len() - 1 {
            return Err(LpError::ValueCountMismatch {
                expected: breaks.len() - 1,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFiniteValue { index: pos as u128 });
        }
        Ok(StepFunction { breaks, values })
    }

    pub fn constant(value: f64) -> Self {
        StepFunction {
            breaks: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at t (right-continuous; the last cell is closed).
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&t));
        let cell = match self.breaks.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
            Ok(pos) => pos.min(self.values.len() - 1),
            Err(pos) => pos - 1,
        };
        self.values[cell]
    }

    /// Cells of both functions refined to the merged breakpoint grid, yielded
    /// as (width, self_value, other_value) left to right.
    pub fn common_cells(&self, other: &StepFunction) -> Vec<(f64, f64, f64)> {
        let grid = merge_breaks(&self.breaks, &other.breaks);
        let mut out = Vec::with_capacity(grid.len() - 1);
        let mut ia = 0;
        let mut ib = 0;
        for w in grid.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            while self.breaks[ia + 1] <= lo {
                ia += 1;
            }
            while other.breaks[ib + 1] <= lo {
                ib += 1;
            }
            out.push((hi - lo, self.values[ia], other.values[ib]));
        }
        out
    }
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    if x == y {
                        j += 1;
                    }
                    i += 1;
                    x
                } else {
                    j += 1;
                    y
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// Sum over the common refinement of width * |f - g|^p. Exact for step
/// functions.
pub fn step_power_sum(f: &StepFunction, g: &StepFunction, p: f64) -> f64 {
    let mut acc = 0.0;
    for (w, a, b) in f.common_cells(g) {
        let d = (a - b).abs();
        if d != 0.0 {
            acc += w * d.powf(p);
        }
    }
    acc
}

/// The function-space distance for either regime of the exponent.
pub fn dist_big_lp(f: &StepFunction, g: &StepFunction, p: PExponent) -> f64 {
    p.finish(step_power_sum(f, g, p.value()))
}

/// A piecewise-constant function on a rectangle grid with values in
/// {-1, 0, 1}; the image type of the indicator embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction2D {
    pub s_breaks: Vec<f64>,
    pub t_breaks: Vec<f64>,
    /// Row-major: values[si][ti] on cell [s_i, s_{i+1}) x [t_j, t_{j+1}).
    pub values: Vec<Vec<i8>>,
}

impl StepFunction2D {
    /// Value on the cell containing (s, t); 0 outside the grid.
    pub fn eval(&self, s: f64, t: f64) -> i8 {
        let si = match locate(&self.s_breaks, s) {
            Some(i) => i,
            None => return 0,
        };
        let ti = match locate(&self.t_breaks, t) {
            Some(i) => i,
            None => return 0,
        };
        self.values[si][ti]
    }
}

fn locate(breaks: &[f64], x: f64) -> Option<usize> {
    if breaks.len() < 2 || x < breaks[0] || x >= *breaks.last().unwrap() {
        return None;
    }
    let pos = match breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
        Ok(p) => p,
        Err(p) => p - 1,
    };
    Some(pos.min(breaks.len() - 2))
}

/// The sign-indicator embedding: (s, t) ↦ 1 when 0 <= t <= f(s), -1 when
/// f(s) < t < 0, 0 otherwise, materialized on the product of f's breakpoint
/// grid and the sorted set {0} ∪ {values of f}. The t-axis is truncated to
/// the smallest interval containing 0 and all values; outside it the
/// function vanishes identically.
pub fn indicator_embed(f: &StepFunction) -> StepFunction2D {
    let mut t_breaks: Vec<f64> = f.values().to_vec();
    t_breaks.push(0.0);
    t_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t_breaks.dedup();
    let s_breaks = f.breaks().to_vec();
    let mut values = Vec::with_capacity(s_breaks.len() - 1);
    for &fs in f.values() {
        let mut row = Vec::with_capacity(t_breaks.len().saturating_sub(1));
        for tw in t_breaks.windows(2) {
            let (lo, hi) = (tw[0], tw[1]);
            // Grid lines include 0 and every value of f, so each t-cell lies
            // entirely inside or outside the indicator region.
            let v = if lo >= 0.0 && hi <= fs {
                1
            } else if hi <= 0.0 && lo >= fs {
                -1
            } else {
                0
            };
            row.push(v);
        }
        values.push(row);
    }
    StepFunction2D {
        s_breaks,
        t_breaks,
        values,
    }
}

/// ||F - G||_{L2}^2 for two embedded images, computed cell-exactly on the
/// joint refinement of their grids.
pub fn indicator_dist_sq(fa: &StepFunction2D, fb: &StepFunction2D) -> f64 {
    let s_grid = merge_breaks(&fa.s_breaks, &fb.s_breaks);
    let mut t_all: Vec<f64> = fa
        .t_breaks
        .iter()
        .chain(fb.t_breaks.iter())
        .cloned()
        .collect();
    t_all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t_all.dedup();
    let mut acc = 0.0;
    for sw in s_grid.windows(2) {
        let (slo, shi) = (sw[0], sw[1]);
        let smid = 0.5 * (slo + shi);
        let mut col = 0.0;
        for tw in t_all.windows(2) {
            let (tlo, thi) = (tw[0], tw[1]);
            let tmid = 0.5 * (tlo + thi);
            let d = (fa.eval(smid, tmid) - fb.eval(smid, tmid)) as f64;
            if d != 0.0 {
                col += (thi - tlo) * d * d;
            }
        }
        acc += (shi - slo) * col;
    }
    acc
}
