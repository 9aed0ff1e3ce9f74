//! Finite metric spaces, snowflake transforms, and distortion measurement.
//!
//! A space is a dense symmetric distance matrix tagged with the strongest
//! validity level it satisfies (semimetric / metric / ultrametric). Triangle
//! checks run with a relative tolerance because snowflaked matrices are
//! produced by floating-point powers.

use crate::extreal::ExtReal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative triangle tolerance: `TRI_TOL * max_entry` absorbs the rounding
/// of `d.powf(s)` without letting genuine violations through at desk scale.
pub const TRI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Semimetric,
    Metric,
    Ultrametric,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has length {len}, expected {n}")]
    NonSquare { row: usize, len: usize, n: usize },
    #[error("entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("matrix not symmetric at ({i},{j}): {a} vs {b}")]
    NonSymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative entry at ({i},{j}): {value}")]
    NegativeEntry { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal at ({i},{i}): {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("triangle inequality violated: d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {sum}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        sum: f64,
    },
    #[error("ultrametric inequality violated: d({i},{k}) = {dik} > max(d({i},{j}), d({j},{k})) = {max}")]
    UltrametricViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        max: f64,
    },
    #[error("snowflake exponent {s} outside (0, 1]")]
    SOutOfRange { s: f64 },
    #[error("space has fewer than 2 points")]
    DegenerateSpace,
    #[error("threshold list is empty")]
    EmptyThresholds,
    #[error("thresholds must be positive and sorted ascending")]
    BadThresholds,
    #[error("map image index {index} out of range for target of size {n}")]
    ImageOutOfRange { index: usize, n: usize },
    #[error("map image length {len} does not match source size {n}")]
    ImageLengthMismatch { len: usize, n: usize },
}

/// A finite metric space: `n` points with a dense symmetric distance matrix.
/// Deserialization re-validates, so a hand-edited payload cannot smuggle in
/// an invalid matrix or an overstated validity tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiniteMetricSpaceRaw")]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    validity: Validity,
}

#[derive(Deserialize)]
struct FiniteMetricSpaceRaw {
    n: usize,
    dist: Vec<f64>,
    validity: Validity,
}

impl TryFrom<FiniteMetricSpaceRaw> for FiniteMetricSpace {
    type Error = MetricError;
    fn try_from(raw: FiniteMetricSpaceRaw) -> Result<Self, MetricError> {
        if raw.dist.len() != raw.n * raw.n {
            return Err(MetricError::NonSquare {
                row: 0,
                len: raw.dist.len(),
                n: raw.n,
            });
        }
        let rows: Vec<Vec<f64>> = raw
            .dist
            .chunks(raw.n.max(1))
            .map(|c| c.to_vec())
            .collect();
        FiniteMetricSpace::validate(&rows, raw.validity)
    }
}

impl FiniteMetricSpace {
    /// Validate a matrix and tag it with the strongest level it satisfies.
    /// Rejects if it does not reach `requested`.
    pub fn validate(dist: &[Vec<f64>], requested: Validity) -> Result<Self, MetricError> {
        let n = dist.len();
        for (row, r) in dist.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NonSquare {
                    row,
                    len: r.len(),
                    n,
                });
            }
        }
        let mut flat = vec![0.0; n * n];
        let mut max_entry: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = dist[i][j];
                if !v.is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(MetricError::NegativeEntry { i, j, value: v });
                }
                if i == j && v != 0.0 {
                    return Err(MetricError::NonzeroDiagonal { i, value: v });
                }
                if j < i && dist[j][i] != v {
                    return Err(MetricError::NonSymmetric {
                        i,
                        j,
                        a: dist[j][i],
                        b: v,
                    });
                }
                flat[i * n + j] = v;
                max_entry = max_entry.max(v);
            }
        }

        let tol = TRI_TOL * max_entry;
        let classified = classify(n, &flat, tol);
        if classified < requested {
            // Re-run the failing check to surface the witness triple.
            return Err(first_violation(n, &flat, tol, requested)
                .expect("classification below requested level implies a violating triple exists"));
        }
        Ok(FiniteMetricSpace {
            n,
            dist: flat,
            validity: classified,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn validity(&self) -> Validity {
        self.validity
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.dist[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .cloned()
            .filter(|&d| d > 0.0)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.min(d))))
    }

    /// Replace every distance by its s-th power, 0 < s <= 1.
    ///
    /// t ↦ t^s is subadditive, so a metric stays a metric; the strong
    /// triangle inequality is preserved verbatim. The validity tag carries
    /// over unchanged.
    pub fn snowflake(&self, s: f64) -> Result<Self, MetricError> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(MetricError::SOutOfRange { s });
        }
        let dist = self.dist.iter().map(|&d| d.powf(s)).collect();
        Ok(FiniteMetricSpace {
            n: self.n,
            dist,
            validity: self.validity,
        })
    }

    /// Parse `{"n": int, "dist": [[...]]}`.
    pub fn from_json(text: &str, requested: Validity) -> Result<Self, MatrixIoError> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            dist: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(MatrixIoError::Json)?;
        if raw.dist.len() != raw.n {
            return Err(MatrixIoError::Shape {
                expected: raw.n,
                got: raw.dist.len(),
            });
        }
        Ok(Self::validate(&raw.dist, requested)?)
    }

    /// Parse n rows of n comma-separated reals.
    pub fn from_csv(text: &str, requested: Validity) -> Result<Self, MatrixIoError> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| MatrixIoError::Csv {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
            rows.push(row);
        }
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(MatrixIoError::Shape {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(Self::validate(&rows, requested)?)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Raw<'a> {
            n: usize,
            dist: &'a Vec<Vec<f64>>,
        }
        let rows = self.rows();
        serde_json::to_string(&Raw {
            n: self.n,
            dist: &rows,
        })
        .expect("matrix serialization cannot fail")
    }
}

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("invalid matrix JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("invalid CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("matrix shape mismatch: expected {expected} rows/cols, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Strongest level the matrix satisfies (entries already screened).
fn classify(n: usize, d: &[f64], tol: f64) -> Validity {
    let mut ultra = true;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let dik = d[i * n + k];
                let dij = d[i * n + j];
                let djk = d[j * n + k];
                if dik > dij + djk + tol {
                    return Validity::Semimetric;
                }
                if dik > dij.max(djk) + tol {
                    ultra = false;
                }
            }
        }
    }
    if ultra {
        Validity::Ultrametric
    } else {
        Validity::Metric
    }
}

fn first_violation(n: usize, d: &[f64], tol: f64, requested: Validity) -> Option<MetricError> {
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let dik = d[i * n + k];
                let dij = d[i * n + j];
                let djk = d[j * n + k];
                if requested >= Validity::Metric && dik > dij + djk + tol {
                    return Some(MetricError::TriangleViolation {
                        i,
                        j,
                        k,
                        dik,
                        sum: dij + djk,
                    });
                }
                if requested == Validity::Ultrametric && dik > dij.max(djk) + tol {
                    return Some(MetricError::UltrametricViolation {
                        i,
                        j,
                        k,
                        dik,
                        max: dij.max(djk),
                    });
                }
            }
        }
    }
    None
}

/// A point map between two finite spaces, stored as target indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointMap {
    pub source: FiniteMetricSpace,
    pub target: FiniteMetricSpace,
    pub image: Vec<usize>,
}

impl PointMap {
    pub fn new(
        source: FiniteMetricSpace,
        target: FiniteMetricSpace,
        image: Vec<usize>,
    ) -> Result<Self, MetricError> {
        if image.len() != source.n() {
            return Err(MetricError::ImageLengthMismatch {
                len: image.len(),
                n: source.n(),
            });
        }
        if let Some(&bad) = image.iter().find(|&&ix| ix >= target.n()) {
            return Err(MetricError::ImageOutOfRange {
                index: bad,
                n: target.n(),
            });
        }
        Ok(PointMap {
            source,
            target,
            image,
        })
    }

    /// The identity-on-indices map from a space to its snowflake.
    pub fn snowflake_map(space: &FiniteMetricSpace, s: f64) -> Result<Self, MetricError> {
        let target = space.snowflake(s)?;
        Ok(PointMap {
            source: space.clone(),
            target,
            image: (0..space.n()).collect(),
        })
    }

    pub fn identity(space: &FiniteMetricSpace) -> Self {
        PointMap {
            source: space.clone(),
            target: space.clone(),
            image: (0..space.n()).collect(),
        }
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.n()];
        for &ix in &self.image {
            if seen[ix] {
                return false;
            }
            seen[ix] = true;
        }
        true
    }

    /// Distance between the images of source points i and j.
    #[inline]
    pub fn image_dist(&self, i: usize, j: usize) -> f64 {
        self.target.dist(self.image[i], self.image[j])
    }

    /// Composition g ∘ f. The caller guarantees f's target indexes g's source.
    pub fn compose(f: &PointMap, g: &PointMap) -> Result<PointMap, MetricError> {
        let image: Vec<usize> = f.image.iter().map(|&ix| g.image[ix]).collect();
        PointMap::new(f.source.clone(), g.target.clone(), image)
    }
}

/// Optimal two-sided Lipschitz constants of a point map, with witnesses.
///
/// Conventions follow the frame `d1/A <= d2 <= B*d1`: `a` is the largest
/// ratio d1/d2 (so 1/a is the sharp lower constant), `b` the largest d2/d1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub a: ExtReal,
    pub b: ExtReal,
    pub product: ExtReal,
    pub witness_lower: (usize, usize),
    pub witness_upper: (usize, usize),
    pub injective: bool,
    /// Set when some positive source distance collapsed to zero, making the
    /// lower constant the +inf sentinel.
    pub collapsed_pair: bool,
}

/// Sharp distortion constants by exhaustive pair scan.
pub fn distortion(map: &PointMap) -> Result<DistortionReport, MetricError> {
    let n = map.source.n();
    if n < 2 {
        return Err(MetricError::DegenerateSpace);
    }
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    let mut wa = (0, 1);
    let mut wb = (0, 1);
    let mut collapsed = false;
    let mut a_inf = false;
    let mut b_inf = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let d1 = map.source.dist(i, j);
            let d2 = map.image_dist(i, j);
            if d1 == 0.0 && d2 == 0.0 {
                continue;
            }
            if d2 == 0.0 {
                // d1 > 0 collapsed; the lower constant blows up.
                if !a_inf {
                    a_inf = true;
                    wa = (i, j);
                }
                collapsed = true;
                continue;
            }
            if d1 == 0.0 {
                if !b_inf {
                    b_inf = true;
                    wb = (i, j);
                }
                continue;
            }
            let ra = d1 / d2;
            let rb = d2 / d1;
            if ra > a {
                a = ra;
                wa = (i, j);
            }
            if rb > b {
                b = rb;
                wb = (i, j);
            }
        }
    }
    let a = if a_inf {
        ExtReal::PosInf
    } else {
        ExtReal::Finite(a)
    };
    let b = if b_inf {
        ExtReal::PosInf
    } else {
        ExtReal::Finite(b)
    };
    let product = match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::Finite(x * y),
        _ => ExtReal::PosInf,
    };
    Ok(DistortionReport {
        a,
        b,
        product,
        witness_lower: wa,
        witness_upper: wb,
        injective: map.is_injective(),
        collapsed_pair: collapsed,
    })
}

/// Compression and expansion moduli sampled at the given thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusProfile {
    pub thresholds: Vec<f64>,
    /// rho[i] = inf { d2(f(x),f(y)) : d1(x,y) >= t_i }, +inf sentinel if empty.
    pub rho: Vec<ExtReal>,
    /// omega[i] = sup { d2(f(x),f(y)) : d1(x,y) <= t_i }, 0 if empty.
    pub omega: Vec<f64>,
}

pub fn moduli(map: &PointMap, thresholds: &[f64]) -> Result<ModulusProfile, MetricError> {
    if thresholds.is_empty() {
        return Err(MetricError::EmptyThresholds);
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) || thresholds.iter().any(|&t| t <= 0.0) {
        return Err(MetricError::BadThresholds);
    }
    let n = map.source.n();
    let mut rho = Vec::with_capacity(thresholds.len());
    let mut omega = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let mut inf: Option<f64> = None;
        let mut sup: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d1 = map.source.dist(i, j);
                let d2 = map.image_dist(i, j);
                if d1 >= t {
                    inf = Some(inf.map_or(d2, |v| v.min(d2)));
                }
                if d1 <= t {
                    sup = sup.max(d2);
                }
            }
        }
        rho.push(inf.map_or(ExtReal::PosInf, ExtReal::Finite));
        omega.push(sup);
    }
    Ok(ModulusProfile {
        thresholds: thresholds.to_vec(),
        rho,
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[f64]]) -> FiniteMetricSpace {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        FiniteMetricSpace::validate(&rows, Validity::Semimetric).unwrap()
    }

    /// Euclidean distances between collinear points {0, 1, 2}.
    fn collinear3() -> FiniteMetricSpace {
        space(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[2.0, 1.0, 0.0]])
    }

    #[test]
    fn equilateral_is_ultrametric() {
        let m = space(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        assert_eq!(m.validity(), Validity::Ultrametric);
    }

    #[test]
    fn collinear_is_metric_not_ultrametric() {
        assert_eq!(collinear3().validity(), Validity::Metric);
    }

    #[test]
    fn triangle_violation_carries_triple() {
        let rows = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let err = FiniteMetricSpace::validate(&rows, Validity::Metric).unwrap_err();
        match err {
            MetricError::TriangleViolation { i, j, k, dik, sum } => {
                assert_eq!((i, j, k), (0, 1, 2));
                assert_eq!(dik, 5.0);
                assert_eq!(sum, 2.0);
            }
            other => panic!("expected TriangleViolation, got {other:?}"),
        }
    }

    #[test]
    fn semimetric_request_accepts_triangle_violation() {
        let rows = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let m = FiniteMetricSpace::validate(&rows, Validity::Semimetric).unwrap();
        assert_eq!(m.validity(), Validity::Semimetric);
    }

    #[test]
    fn rejections() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(
            FiniteMetricSpace::validate(&asym, Validity::Semimetric),
            Err(MetricError::NonSymmetric { .. })
        ));
        let neg = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert!(matches!(
            FiniteMetricSpace::validate(&neg, Validity::Semimetric),
            Err(MetricError::NegativeEntry { .. })
        ));
        let diag = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(
            FiniteMetricSpace::validate(&diag, Validity::Semimetric),
            Err(MetricError::NonzeroDiagonal { .. })
        ));
    }

    #[test]
    fn snowflake_identity_at_s1() {
        let m = collinear3();
        let w = m.snowflake(1.0).unwrap();
        assert_eq!(m.rows(), w.rows());
    }

    #[test]
    fn snowflake_halves_exponents() {
        let m = space(&[&[0.0, 1.0, 4.0], &[1.0, 0.0, 4.0], &[4.0, 4.0, 0.0]]);
        let w = m.snowflake(0.5).unwrap();
        assert_eq!(w.dist(0, 1), 1.0);
        assert_eq!(w.dist(0, 2), 2.0);
    }

    #[test]
    fn snowflake_rejects_bad_exponent() {
        let m = collinear3();
        assert!(matches!(
            m.snowflake(0.0),
            Err(MetricError::SOutOfRange { .. })
        ));
        assert!(matches!(
            m.snowflake(1.5),
            Err(MetricError::SOutOfRange { .. })
        ));
    }

    #[test]
    fn distortion_identity_is_one() {
        let m = collinear3();
        let rep = distortion(&PointMap::identity(&m)).unwrap();
        assert_eq!(rep.a, ExtReal::Finite(1.0));
        assert_eq!(rep.b, ExtReal::Finite(1.0));
        assert_eq!(rep.product, ExtReal::Finite(1.0));
        assert!(rep.injective);
    }

    #[test]
    fn distortion_of_half_snowflake() {
        // Distances {1, 2}: ratios d/d^0.5 are {1, sqrt(2)}.
        let m = space(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 2.0], &[2.0, 2.0, 0.0]]);
        let map = PointMap::snowflake_map(&m, 0.5).unwrap();
        let rep = distortion(&map).unwrap();
        let sqrt2 = 2.0_f64.sqrt();
        assert!((rep.a.to_f64() - sqrt2).abs() < 1e-15);
        assert!((rep.b.to_f64() - 1.0).abs() < 1e-15);
        assert!((rep.product.to_f64() - sqrt2).abs() < 1e-15);
    }

    #[test]
    fn non_injective_map_flags_sentinel() {
        let m = collinear3();
        let map = PointMap::new(m.clone(), m, vec![0, 0, 2]).unwrap();
        let rep = distortion(&map).unwrap();
        assert!(!rep.injective);
        assert!(rep.collapsed_pair);
        assert_eq!(rep.a, ExtReal::PosInf);
        assert!(rep.b.is_finite());
    }

    #[test]
    fn degenerate_space_errors() {
        let m = space(&[&[0.0]]);
        assert!(matches!(
            distortion(&PointMap::identity(&m)),
            Err(MetricError::DegenerateSpace)
        ));
    }

    #[test]
    fn moduli_identity_endpoints() {
        let m = collinear3();
        let map = PointMap::identity(&m);
        let prof = moduli(&map, &[0.5, 2.0]).unwrap();
        // Threshold below min positive distance: rho = min positive image distance.
        assert_eq!(prof.rho[0], ExtReal::Finite(1.0));
        // Threshold at max distance: omega = max distance.
        assert_eq!(prof.omega[1], 2.0);
    }

    #[test]
    fn moduli_rejects_empty_or_unsorted() {
        let m = collinear3();
        let map = PointMap::identity(&m);
        assert!(matches!(moduli(&map, &[]), Err(MetricError::EmptyThresholds)));
        assert!(matches!(
            moduli(&map, &[2.0, 1.0]),
            Err(MetricError::BadThresholds)
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = collinear3();
        let text = m.to_json();
        let back = FiniteMetricSpace::from_json(&text, Validity::Metric).unwrap();
        assert_eq!(m.rows(), back.rows());
    }

    #[test]
    fn csv_parse() {
        let text = "0,1,2\n1,0,1\n2,1,0\n";
        let m = FiniteMetricSpace::from_csv(text, Validity::Metric).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.dist(0, 2), 2.0);
    }

    #[test]
    fn malformed_json_reports_triangle_payload() {
        let text = r#"{"n":3,"dist":[[0,1,5],[1,0,1],[5,1,0]]}"#;
        let err = FiniteMetricSpace::from_json(text, Validity::Metric).unwrap_err();
        assert!(matches!(
            err,
            MatrixIoError::Metric(MetricError::TriangleViolation { .. })
        ));
    }
}
