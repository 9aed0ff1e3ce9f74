//! Kernel-isometry and indicator-embedding experiments.

use super::{cell, Experiment, RunOutcome};
use crate::params::Params;
use crate::report::CliError;
use serde_json::json;
use snowlab_core::gen;
use snowlab_core::lp::{dist_big_lp, indicator_dist_sq, indicator_embed, PExponent};
use snowlab_core::mn::{mn_isometry_check, normalizer};

pub struct MnCheck;

impl Experiment for MnCheck {
    fn verb(&self) -> &'static str {
        "mn-check"
    }

    fn csv_columns(&self) -> &'static [&'static str] {
        &["p", "q", "c", "c_err", "max_kernel_rel_err", "max_pair_rel_err", "violations"]
    }

    fn csv_row(&self, results: &serde_json::Value) -> Vec<String> {
        self.csv_columns().iter().map(|k| cell(results, k)).collect()
    }

    fn run(&self, params: &Params, seed: u64) -> Result<RunOutcome, CliError> {
        let p = params.require_f64("p")?;
        let q = params.require_f64("q")?;
        let tol = params.f64("tol", 1e-7)?;
        let pairs = params.usize("pairs", 100)?;
        let cells = params.usize("cells", 4)?;
        let deltas = params.f64_list("deltas", &[0.1, 1.0, 10.0])?;

        let kernel = normalizer(p, q, tol)?;
        // The identity kernel(d) = |d|^p, checked end to end; 10x the
        // requested tolerance is the documented acceptance threshold.
        let threshold = 10.0 * tol;
        let mut kernel_checks = Vec::new();
        let mut max_kernel_rel_err: f64 = 0.0;
        for &d in &deltas {
            let value = kernel.kernel_distance(d)?;
            let expect = d.abs().powf(p);
            let rel_err = (value - expect).abs() / expect.max(1e-300);
            max_kernel_rel_err = max_kernel_rel_err.max(rel_err);
            kernel_checks.push(json!({
                "delta": d,
                "value": value,
                "expected": expect,
                "rel_err": rel_err,
            }));
        }

        let mut pair_reports = Vec::with_capacity(pairs);
        let mut max_pair_rel_err: f64 = 0.0;
        for case in 0..pairs {
            let f = gen::step_function(cells, -2.0, 2.0, seed ^ (2 * case as u64 + 1));
            let g = gen::step_function(cells, -2.0, 2.0, seed ^ (2 * case as u64 + 2));
            let chk = mn_isometry_check(&kernel, &f, &g)?;
            max_pair_rel_err = max_pair_rel_err.max(chk.rel_err);
            pair_reports.push(json!({
                "lhs": chk.lhs,
                "rhs": chk.rhs,
                "rel_err": chk.rel_err,
            }));
        }

        let violations = kernel_checks
            .iter()
            .filter(|c| c["rel_err"].as_f64().unwrap_or(1.0) > threshold)
            .count()
            + usize::from(max_pair_rel_err > threshold);
        let results = json!({
            "p": p,
            "q": q,
            "tol": tol,
            "c": kernel.c,
            "c_err": kernel.c_err,
            "kernel_checks": kernel_checks,
            "pairs": pairs,
            "cells": cells,
            "max_kernel_rel_err": max_kernel_rel_err,
            "max_pair_rel_err": max_pair_rel_err,
            "pair_checks": pair_reports,
            "threshold": threshold,
            "violations": violations,
        });
        Ok(RunOutcome {
            results,
            violation: violations > 0,
        })
    }
}

pub struct IndicatorCheck;

impl Experiment for IndicatorCheck {
    fn verb(&self) -> &'static str {
        "indicator-check"
    }

    fn csv_columns(&self) -> &'static [&'static str] {
        &["pairs", "cells", "max_abs_err", "violations"]
    }

    fn csv_row(&self, results: &serde_json::Value) -> Vec<String> {
        self.csv_columns().iter().map(|k| cell(results, k)).collect()
    }

    fn run(&self, params: &Params, seed: u64) -> Result<RunOutcome, CliError> {
        let pairs = params.usize("pairs", 1_000)?;
        let cells = params.usize("cells", 5)?;
        let lo = params.f64("lo", -2.0)?;
        let hi = params.f64("hi", 2.0)?;
        let tol = params.f64("tol", 1e-12)?;

        let one = PExponent::new(1.0).expect("1 is a valid exponent");
        let mut max_abs_err: f64 = 0.0;
        let mut worst_pair = 0usize;
        for case in 0..pairs {
            let f = gen::step_function(cells, lo, hi, seed ^ (2 * case as u64 + 1));
            let g = gen::step_function(cells, lo, hi, seed ^ (2 * case as u64 + 2));
            let lhs = indicator_dist_sq(&indicator_embed(&f), &indicator_embed(&g));
            let rhs = dist_big_lp(&f, &g, one);
            let err = (lhs - rhs).abs();
            if err > max_abs_err {
                max_abs_err = err;
                worst_pair = case;
            }
        }
        let violations = usize::from(max_abs_err > tol);
        let results = json!({
            "pairs": pairs,
            "cells": cells,
            "value_range": [lo, hi],
            "tol": tol,
            "max_abs_err": max_abs_err,
            "worst_pair_index": worst_pair,
            "violations": violations,
        });
        Ok(RunOutcome {
            results,
            violation: violations > 0,
        })
    }
}
