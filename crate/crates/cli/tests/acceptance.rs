//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria with wall-clock budgets grab a shared lock so concurrent tests
//! cannot distort their timing.

use snowlab_core::assouad::{
    bound_constants, certify_window, seq_pair_power_sum,
    verify_pairs, PsiFamily,
};
use snowlab_core::extreal::ExtReal;
use snowlab_core::gen;
use snowlab_core::invariants::{
    cube_critical, quad_critical, space_roundness, transfer_check, CubeAssignment,
};
use snowlab_core::lp::{
    dist_big_lp, indicator_dist_sq, indicator_embed, seq_power_sum, PExponent, SparseSeq,
};
use snowlab_core::metric::{PointMap, Validity};
use snowlab_core::mn::{mn_isometry_check, normalizer};
use snowlab_core::rng::KeyedRng;
use std::sync::Mutex;
use std::time::{Duration, Instant};

static TIMING_LOCK: Mutex<()> = Mutex::new(());

fn finish(name: &str, pass: bool, detail: String) {
    println!(
        "acceptance {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {name} failed: {detail}");
}

/// Seeded pairs in [-radius, radius] with gap at least min_gap.
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

#[test]
fn criterion_1_assouad_bound_certification() {
    let _guard = TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let min_gap = 2.0f64.powi(-10);
    let mut detail = String::new();
    let mut pass = true;
    for (p, q) in [(1.0, 2.0), (0.5, 1.0), (1.0, 3.0)] {
        let started = Instant::now();
        let fam = PsiFamily::new(p, q).unwrap();
        let consts = bound_constants(p, q).unwrap();
        if (p, q) == (1.0, 2.0) {
            assert_eq!(consts.a, 0.0625);
            assert_eq!(consts.b, 68.0);
        }
        let win = certify_window(&fam, 10.0, min_gap, 1e-6).unwrap();
        let pairs = scalar_pairs(42, 10_000, 10.0, min_gap);
        let v = verify_pairs(&fam, &win, &pairs).unwrap();
        let lower = (1.0 - 1e-6) * consts.a;
        let ok_bounds = v.min_ratio >= lower && v.max_ratio <= consts.b;
        let elapsed = started.elapsed();
        let ok_time = elapsed < Duration::from_secs(10);
        pass &= ok_bounds && ok_time;
        detail.push_str(&format!(
            "(p={p}, q={q}): ratios in [{:.6}, {:.6}] vs [{lower:.6}, {:.6}], {} pairs, {:.2?}; ",
            v.min_ratio, v.max_ratio, consts.b, v.pairs, elapsed
        ));
    }
    finish("1 (assouad frame bounds)", pass, detail);
}

#[test]
fn criterion_2_coordinate_wise_embedding() {
    let _guard = TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let (p, q) = (0.5, 1.0);
    let min_gap = 2.0f64.powi(-10);
    let fam = PsiFamily::new(p, q).unwrap();
    let consts = bound_constants(p, q).unwrap();
    let win = certify_window(&fam, 10.0, min_gap, 1e-6).unwrap();
    let lane = KeyedRng::new(2024).fork(0x657135);
    let lower = (1.0 - 1e-6) * consts.a;
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let mut checked = 0;
    for case in 0..1000u64 {
        let pair = lane.fork(case);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for slot in 0..10u64 {
            let idx = (10 * case + slot) as u128;
            let a = pair.f64_in(3 * slot, -10.0, 10.0);
            let mut b = pair.f64_in(3 * slot + 1, -10.0, 10.0);
            if (a - b).abs() < min_gap {
                b = a;
            }
            xs.push((idx, a));
            ys.push((idx, b));
        }
        let x = SparseSeq::from_pairs(xs).unwrap();
        let y = SparseSeq::from_pairs(ys).unwrap();
        let mass = seq_power_sum(&x, &y, p);
        if mass == 0.0 {
            continue;
        }
        let ratio = seq_pair_power_sum(&fam, &win, &x, &y) / mass;
        worst_low = worst_low.min(ratio);
        worst_high = worst_high.max(ratio);
        checked += 1;
    }
    let elapsed = started.elapsed();
    let pass = worst_low >= lower && worst_high <= consts.b && elapsed < Duration::from_secs(10);
    finish(
        "2 (coordinate-wise embedding)",
        pass,
        format!(
            "{checked} sparse pairs at (0.5, 1): ratios in [{worst_low:.6}, {worst_high:.6}] vs [{lower:.6}, {:.6}], {elapsed:.2?}",
            consts.b
        ),
    );
}

#[test]
fn criterion_3_mendel_naor_kernel() {
    let mut pass = true;
    let mut detail = String::new();

    for (p, q) in [(1.0, 2.0), (0.5, 1.0), (1.5, 3.0)] {
        let kernel = normalizer(p, q, 1e-9).unwrap();
        let mut worst: f64 = 0.0;
        for delta in [0.1, 1.0, 10.0] {
            let v = kernel.kernel_distance(delta).unwrap();
            let expect = delta.abs().powf(p);
            worst = worst.max((v - expect).abs() / expect);
        }
        pass &= worst <= 1e-6;
        detail.push_str(&format!("kernel (p={p}, q={q}): max rel err {worst:.2e}; "));
    }

    let unit = normalizer(1.0, 2.0, 1e-9).unwrap();
    let closed_form = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let c_dev = (unit.c - closed_form).abs();
    pass &= c_dev <= 1e-8;
    detail.push_str(&format!("c vs (2pi)^-1/2: {c_dev:.2e}; "));

    // 100 step-function pairs split across the two F-space-side exponent
    // pairs; tolerance 1e-6 so the documented 10x factor gives 1e-5.
    let mut worst_pair: f64 = 0.0;
    for (lane, (p, q)) in [(10u64, (1.0, 2.0)), (20, (0.5, 1.0))] {
        let kernel = normalizer(p, q, 1e-6).unwrap();
        for case in 0..50u64 {
            let f = gen::step_function(4, -2.0, 2.0, lane * 1000 + 2 * case);
            let g = gen::step_function(4, -2.0, 2.0, lane * 1000 + 2 * case + 1);
            let chk = mn_isometry_check(&kernel, &f, &g).unwrap();
            worst_pair = worst_pair.max(chk.rel_err);
        }
    }
    pass &= worst_pair <= 1e-5;
    detail.push_str(&format!("isometry on 100 pairs: max rel err {worst_pair:.2e}"));
    finish("3 (mendel-naor kernel)", pass, detail);
}

#[test]
fn criterion_4_indicator_embedding_exactness() {
    let _guard = TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let one = PExponent::new(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..1000u64 {
        let f = gen::step_function(5, -2.0, 2.0, 31 * 1000 + 2 * case);
        let g = gen::step_function(5, -2.0, 2.0, 31 * 1000 + 2 * case + 1);
        let lhs = indicator_dist_sq(&indicator_embed(&f), &indicator_embed(&g));
        let rhs = dist_big_lp(&f, &g, one);
        worst = worst.max((lhs - rhs).abs());
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(1);
    finish(
        "4 (indicator embedding exactness)",
        pass,
        format!("1000 pairs: max |lhs - rhs| = {worst:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_5_roundness() {
    let _guard = TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();

    let collinear = snowlab_core::metric::FiniteMetricSpace::validate(
        &[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ],
        Validity::Metric,
    )
    .unwrap();
    let rep = space_roundness(&collinear, 64.0, 64, 1e-10).unwrap();
    let critical = rep.critical.to_f64();
    let witness_ok = matches!(
        &rep.witness,
        Some(snowlab_core::invariants::Witness::Quad { indices }) if *indices == [0, 1, 2, 1]
    );
    let collinear_ok = (critical - 2.0).abs() <= 1e-9 && witness_ok;

    let ultra = gen::hierarchy_ultrametric(8, 2025);
    assert_eq!(ultra.validity(), Validity::Ultrametric);
    let urep = space_roundness(&ultra, 64.0, 64, 1e-9).unwrap();
    let ultra_ok = urep.critical == ExtReal::PosInf && urep.exhaustive;

    let elapsed = started.elapsed();
    let pass = collinear_ok && ultra_ok && elapsed < Duration::from_secs(30);
    finish(
        "5 (roundness)",
        pass,
        format!(
            "collinear critical = {critical:.12} witness {:?}; 8-point ultrametric sentinel: {}; {elapsed:.2?}",
            rep.witness, urep.critical
        ),
    );
}

#[test]
fn criterion_6_scaling_laws() {
    let mut worst_dev: f64 = 0.0;
    let mut mismatches = 0usize;
    let mut finite_checks = 0usize;
    for seed in 0..5u64 {
        let space = gen::euclidean_metric(6, 3, 9000 + seed);
        for &s in &[0.5, 0.25] {
            let snow = space.snowflake(s).unwrap();
            let p_cap = 16.0;
            for rank in 0..6usize.pow(4) {
                let quad = (
                    rank / 216,
                    (rank / 36) % 6,
                    (rank / 6) % 6,
                    rank % 6,
                );
                let base = quad_critical(&space, quad, p_cap, 48, 1e-11).unwrap();
                let scaled = quad_critical(&snow, quad, p_cap / s, 48, 1e-11).unwrap();
                match (base.critical, scaled.critical) {
                    (ExtReal::Finite(c), ExtReal::Finite(cs)) => {
                        let dev = (cs - c / s).abs() / (c / s);
                        worst_dev = worst_dev.max(dev);
                        if dev > 1e-9 {
                            mismatches += 1;
                        }
                        finite_checks += 1;
                    }
                    (ExtReal::PosInf, ExtReal::PosInf) => {}
                    _ => mismatches += 1,
                }
                // The same witness read as a 2-cube (Enflo side of the law).
                let cube =
                    CubeAssignment::new(2, vec![quad.0, quad.1, quad.3, quad.2], 6).unwrap();
                let cb = cube_critical(&space, &cube, p_cap, 48, 1e-11).unwrap();
                let cs = cube_critical(&snow, &cube, p_cap / s, 48, 1e-11).unwrap();
                match (cb.critical, cs.critical) {
                    (ExtReal::Finite(c), ExtReal::Finite(csc)) => {
                        let dev = (csc - c / s).abs() / (c / s);
                        worst_dev = worst_dev.max(dev);
                        if dev > 1e-9 {
                            mismatches += 1;
                        }
                        finite_checks += 1;
                    }
                    (ExtReal::PosInf, ExtReal::PosInf) => {}
                    _ => mismatches += 1,
                }
            }
        }
    }
    let pass = mismatches == 0 && finite_checks > 0;
    finish(
        "6 (scaling laws)",
        pass,
        format!(
            "{finite_checks} finite witness checks over 5 spaces x s in {{0.5, 0.25}}: max rel dev {worst_dev:.2e}, {mismatches} mismatches"
        ),
    );
}

#[test]
fn criterion_7_transfer_property() {
    let rng = KeyedRng::new(777);
    let mut counterexamples = 0usize;
    for case in 0..10_000u64 {
        let lane = rng.fork(case);
        let src = gen::uniform_metric(6, lane.u64_at(0));
        let dst = gen::uniform_metric(6, lane.u64_at(1));
        let image = gen::permutation(6, lane.u64_at(2));
        let map = PointMap::new(src, dst, image).unwrap();
        let dim = 1 + lane.index_at(3, 3) as u32;
        let vertex: Vec<usize> = (0..(1usize << dim))
            .map(|slot| lane.index_at(100 + slot as u64, 6))
            .collect();
        let cube = CubeAssignment::new(dim, vertex, 6).unwrap();
        let p = [1.0, 1.5, 2.0, 2.5, 3.0][lane.index_at(4, 5)];
        if !transfer_check(&map, &cube, p).unwrap() {
            counterexamples += 1;
        }
    }
    finish(
        "7 (transfer property)",
        counterexamples == 0,
        format!("10000 seeded (map, cube, p) triples: {counterexamples} counterexamples"),
    );
}

#[test]
fn criterion_8_determinism_across_thread_counts() {
    let bin = env!("CARGO_BIN_EXE_snowlab");
    let dir = std::env::temp_dir().join(format!("snowlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let collinear = dir.join("collinear3.json");
    std::fs::write(&collinear, r#"{"n":3,"dist":[[0,1,2],[1,0,1],[2,1,0]]}"#).unwrap();
    let matrix = collinear.to_str().unwrap();

    let cases: Vec<(&str, Vec<String>)> = vec![
        (
            "snowflake-verify",
            vec!["--p", "1", "--q", "2", "--pairs", "2000", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "embed-seq-verify",
            vec!["--p", "0.5", "--q", "1", "--pairs", "100", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "mn-check",
            vec!["--p", "1", "--q", "2", "--tol", "1e-7", "--pairs", "3", "--cells", "3", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "roundness",
            vec!["--matrix", matrix, "--pcap", "16"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "enflo",
            vec!["--matrix", matrix, "--nmax", "2", "--pcap", "16", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "scaling-check",
            vec!["--matrix", matrix, "--s", "0.5,0.25"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "indicator-check",
            vec!["--pairs", "200", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "distortion",
            vec!["--matrix", matrix, "--s", "0.5"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
    ];

    let mut pass = true;
    let mut detail = String::new();
    for (verb, args) in &cases {
        let out = dir.join(format!("{verb}.json"));
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let status = std::process::Command::new(bin)
                .arg(verb)
                .args(args)
                .arg("--deterministic")
                .arg("--out")
                .arg(&out)
                .env("SNOWLAB_THREADS", threads)
                .status()
                .unwrap();
            assert!(
                status.code() == Some(0) || status.code() == Some(2),
                "{verb} exited with {status:?}"
            );
            outputs.push(std::fs::read(&out).unwrap());
        }
        let identical = outputs[0] == outputs[1];
        pass &= identical;
        detail.push_str(&format!(
            "{verb}: {}; ",
            if identical { "byte-identical" } else { "DIFFERS" }
        ));
    }
    let _ = std::fs::remove_dir_all(&dir);
    finish("8 (determinism across SNOWLAB_THREADS)", pass, detail);
}
