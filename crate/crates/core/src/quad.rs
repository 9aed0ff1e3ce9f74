//! Adaptive Gauss–Kronrod panels for the oscillatory kernel integrals.
//!
//! Panels are always aligned so the integrand is smooth and single-signed
//! inside each one; refinement bisects the worst panel until the summed
//! error estimate fits the caller's absolute budget. The per-panel estimate
//! is the raw |K15 - G7| gap, which overstates the Kronrod error and keeps
//! the accumulated bound conservative.

/// 15-point Kronrod abscissae on [0, 1] side (symmetric).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

/// 7-point Gauss weights.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// 15-point Kronrod weights.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// One G7/K15 evaluation over [a, b]: (kronrod value, |K - G| estimate).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded;

/// Integrate the union of seed panels, bisecting the worst panel until the
/// summed error estimate is at most `abs_tol` or the panel cap is hit.
pub fn adaptive_panels(
    f: &dyn Fn(f64) -> f64,
    seeds: &[(f64, f64)],
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quad, BudgetExceeded> {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let mut panels: Vec<Panel> = seeds
        .iter()
        .map(|&(a, b)| {
            let (value, err) = gk15(f, a, b);
            Panel { a, b, value, err }
        })
        .collect();
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol {
            break;
        }
        if panels.len() >= max_panels {
            return Err(BudgetExceeded);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.partial_cmp(&b.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Panel is at floating-point resolution; its estimate cannot
            // improve further.
            return Err(BudgetExceeded);
        }
        let (v1, e1) = gk15(f, a, mid);
        let (v2, e2) = gk15(f, mid, b);
        panels[worst] = Panel {
            a,
            b: mid,
            value: v1,
            err: e1,
        };
        panels.push(Panel {
            a: mid,
            b,
            value: v2,
            err: e2,
        });
    }
    // Deterministic summation order: sort by left endpoint.
    panels.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    let mut value = 0.0;
    let mut err = 0.0;
    for p in &panels {
        value += p.value;
        err += p.err;
    }
    Ok(Quad { value, err })
}
