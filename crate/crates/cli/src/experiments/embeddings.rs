//! Frame-bound verification experiments for the tent-function embeddings.

use super::{cell, Experiment, RunOutcome};
use crate::params::Params;
use crate::report::CliError;
use serde_json::json;
use snowlab_core::assouad::{
    bound_constants, certify_window, lower_witness, seq_pair_power_sum, verify_pairs, PsiFamily,
};
use snowlab_core::lp::{seq_power_sum, SparseSeq};
use snowlab_core::rng::KeyedRng;

/// Seeded scalar pairs whose gap lies in the window's certified range.
/// Deterministic per pair index regardless of thread count.
fn scalar_pairs(seed: u64, n: usize, radius: f64, min_gap: f64) -> Vec<(f64, f64)> {
    let lane = KeyedRng::new(seed).fork(0x7061_6972);
    (0..n)
        .map(|i| {
            let pair = lane.fork(i as u64);
            let mut attempt = 0u64;
            loop {
                let x = pair.f64_in(2 * attempt, -radius, radius);
                let y = pair.f64_in(2 * attempt + 1, -radius, radius);
                if (x - y).abs() >= min_gap {
                    return (x, y);
                }
                attempt += 1;
            }
        })
        .collect()
}

pub struct SnowflakeVerify;

impl Experiment for SnowflakeVerify {
    fn verb(&self) -> &'static str {
        "snowflake-verify"
    }

    fn csv_columns(&self) -> &'static [&'static str] {
        &[
            "p",
            "q",
            "s",
            "a",
            "b",
            "a_emp",
            "b_emp",
            "a_emp_times_b_emp",
            "violations",
        ]
    }

    fn csv_row(&self, results: &serde_json::Value) -> Vec<String> {
        self.csv_columns().iter().map(|k| cell(results, k)).collect()
    }

    fn run(&self, params: &Params, seed: u64) -> Result<RunOutcome, CliError> {
        let p = params.require_f64("p")?;
        let q = params.require_f64("q")?;
        let radius = params.f64("radius", 10.0)?;
        let min_gap = params.f64("min_gap", 2.0f64.powi(-10))?;
        let eps = params.f64("eps", 1e-6)?;
        let pairs = params.usize("pairs", 10_000)?;

        let fam = PsiFamily::new(p, q)?;
        let consts = bound_constants(p, q)?;
        let win = certify_window(&fam, radius, min_gap, eps)?;
        let sampled = scalar_pairs(seed, pairs, radius, min_gap);
        let verification = verify_pairs(&fam, &win, &sampled)?;
        let witness_failures = sampled
            .iter()
            .filter(|&&(x, y)| match lower_witness(&fam, &win, x, y) {
                Some(w) => w.contribution < w.floor * (1.0 - 1e-9),
                None => true,
            })
            .count();

        let violations =
            verification.lower_violations + verification.upper_violations + witness_failures;
        let results = json!({
            "p": p,
            "q": q,
            "s": p / q,
            "beta": fam.beta,
            "a": consts.a,
            "b": consts.b,
            "window": win,
            "pairs": verification.pairs,
            "a_emp": verification.min_ratio,
            "b_emp": verification.max_ratio,
            "a_emp_times_b_emp": verification.min_ratio * verification.max_ratio,
            "witness_min_pair": verification.witness_min,
            "witness_max_pair": verification.witness_max,
            "lower_floor": (1.0 - win.eps_certified) * consts.a,
            "lower_violations": verification.lower_violations,
            "upper_violations": verification.upper_violations,
            "witness_failures": witness_failures,
            "violations": violations,
        });
        Ok(RunOutcome {
            results,
            violation: violations > 0,
        })
    }
}

/// Seeded sparse sequence pairs sharing support, with per-coordinate gaps
/// kept inside the certified regime (equal coordinates are allowed and
/// contribute zero to both sides).
fn seq_pairs(
    seed: u64,
    n: usize,
    support: usize,
    span: u128,
    radius: f64,
    min_gap: f64,
) -> Vec<(SparseSeq, SparseSeq)> {
    let lane = KeyedRng::new(seed).fork(0x7365_7170);
    (0..n)
        .map(|case| {
            let pair = lane.fork(case as u64);
            let mut xs = Vec::with_capacity(support);
            let mut ys = Vec::with_capacity(support);
            let mut used = Vec::with_capacity(support);
            let mut counter = 0u64;
            while used.len() < support {
                let idx = pair.u64_at(counter) as u128 % span;
                counter += 1;
                if used.contains(&idx) {
                    continue;
                }
                used.push(idx);
                let a = pair.f64_in(counter, -radius, radius);
                let mut b = pair.f64_in(counter + 1, -radius, radius);
                counter += 2;
                if (a - b).abs() < min_gap {
                    b = a;
                }
                xs.push((idx, a));
                ys.push((idx, b));
            }
            (
                SparseSeq::from_pairs(xs).expect("finite values"),
                SparseSeq::from_pairs(ys).expect("finite values"),
            )
        })
        .collect()
}

pub struct EmbedSeqVerify;

impl Experiment for EmbedSeqVerify {
    fn verb(&self) -> &'static str {
        "embed-seq-verify"
    }

    fn csv_columns(&self) -> &'static [&'static str] {
        &[
            "p",
            "q",
            "s",
            "a",
            "b",
            "a_emp",
            "b_emp",
            "a_emp_times_b_emp",
            "violations",
        ]
    }

    fn csv_row(&self, results: &serde_json::Value) -> Vec<String> {
        self.csv_columns().iter().map(|k| cell(results, k)).collect()
    }

    fn run(&self, params: &Params, seed: u64) -> Result<RunOutcome, CliError> {
        let p = params.require_f64("p")?;
        let q = params.require_f64("q")?;
        let radius = params.f64("radius", 10.0)?;
        let min_gap = params.f64("min_gap", 2.0f64.powi(-10))?;
        let eps = params.f64("eps", 1e-6)?;
        let pairs = params.usize("pairs", 1_000)?;
        let support = params.usize("support", 10)?;
        let span = params.u64("span", 64)? as u128;

        let fam = PsiFamily::new(p, q)?;
        let consts = bound_constants(p, q)?;
        let win = certify_window(&fam, radius, min_gap, eps)?;
        let lower_floor = (1.0 - win.eps_certified) * consts.a;

        let cases = seq_pairs(seed, pairs, support, span, radius, min_gap);
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        let mut lower_violations = 0usize;
        let mut upper_violations = 0usize;
        let mut skipped_equal = 0usize;
        for (x, y) in &cases {
            let mass = seq_power_sum(x, y, p);
            if mass == 0.0 {
                skipped_equal += 1;
                continue;
            }
            let s = seq_pair_power_sum(&fam, &win, x, y);
            let ratio = s / mass;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            if ratio < lower_floor {
                lower_violations += 1;
            }
            if ratio > consts.b {
                upper_violations += 1;
            }
        }
        let violations = lower_violations + upper_violations;
        let results = json!({
            "p": p,
            "q": q,
            "s": p / q,
            "a": consts.a,
            "b": consts.b,
            "window": win,
            "pairs": cases.len(),
            "support": support,
            "skipped_equal_pairs": skipped_equal,
            "a_emp": min_ratio,
            "b_emp": max_ratio,
            "a_emp_times_b_emp": min_ratio * max_ratio,
            "lower_floor": lower_floor,
            "lower_violations": lower_violations,
            "upper_violations": upper_violations,
            "violations": violations,
        });
        Ok(RunOutcome {
            results,
            violation: violations > 0,
        })
    }
}
