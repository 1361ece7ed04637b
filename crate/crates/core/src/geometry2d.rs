//! Two-covariate geometry: the projections `alpha_gamma` of the response onto
//! the four model spaces, the correlation-case taxonomy, barycentric weights
//! and closed-form optimality conditions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Tolerance for strict inequalities in case and optimality checks.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Model order used for probability arrays: `[M00, M10, M01, M11]`.
pub const MODELS2: [u32; 4] = [0b00, 0b01, 0b10, 0b11];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoints {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub a00: [f64; 2],
    pub a10: [f64; 2],
    pub a01: [f64; 2],
    pub a11: [f64; 2],
}

impl AlphaPoints {
    /// Midpoint `E = (a/2, d/2)` of the segment from `alpha_00` to `alpha_11`.
    pub fn e(&self) -> [f64; 2] {
        [self.a / 2.0, self.d / 2.0]
    }

    /// Points in `[M00, M10, M01, M11]` order.
    pub fn all(&self) -> [[f64; 2]; 4] {
        [self.a00, self.a10, self.a01, self.a11]
    }

    /// Model-averaged point `sum_gamma p_gamma alpha_gamma`.
    pub fn average(&self, probs: &[f64; 4]) -> [f64; 2] {
        let pts = self.all();
        let mut out = [0.0; 2];
        for (p, pt) in probs.iter().zip(pts.iter()) {
            out[0] += p * pt[0];
            out[1] += p * pt[1];
        }
        out
    }

    /// Squared distances `||alpha_gamma - abar||^2` in `[M00, M10, M01, M11]` order.
    pub fn distances(&self, abar: [f64; 2]) -> [f64; 4] {
        self.all().map(|p| (p[0] - abar[0]).powi(2) + (p[1] - abar[1]).powi(2))
    }
}

fn corr_det(r12: f64, r1y: f64, r2y: f64) -> f64 {
    1.0 - r12 * r12 - r1y * r1y - r2y * r2y + 2.0 * r12 * r1y * r2y
}

fn check_correlations(r12: f64, r1y: f64, r2y: f64) -> Result<()> {
    if ![r12, r1y, r2y].iter().all(|r| r.is_finite() && r.abs() <= 1.0) || r12.abs() >= 1.0 {
        return Err(Error::Domain(format!("invalid correlations ({r12}, {r1y}, {r2y})")));
    }
    if corr_det(r12, r1y, r2y) < -1e-12 {
        return Err(Error::Domain(format!("correlations ({r12}, {r1y}, {r2y}) are not positive semidefinite")));
    }
    Ok(())
}

/// Coordinates of the four model projections in the plane spanned by the covariates.
pub fn alpha_points(r12: f64, r1y: f64, r2y: f64) -> Result<AlphaPoints> {
    check_correlations(r12, r1y, r2y)?;
    let s = (1.0 - r12 * r12).sqrt();
    let (a, b, c, d) = (r1y, r12 * r2y, s * r2y, (r2y - r12 * r1y) / s);
    Ok(AlphaPoints { a, b, c, d, a00: [0.0, 0.0], a10: [a, 0.0], a01: [b, c], a11: [a, d] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    Orthogonal,
    Case1,
    Case2,
    Case3,
    /// `|r12|` equals `min(|r1y/r2y|, |r2y/r1y|)` within tolerance.
    Boundary,
    /// One covariate is uncorrelated with the response.
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomCase {
    pub tag: CaseTag,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
}

/// Classifies a correlation triple into the orthogonal case or Cases 1-3.
pub fn classify_case(r12: f64, r1y: f64, r2y: f64) -> Result<GeomCase> {
    check_correlations(r12, r1y, r2y)?;
    if r1y == 0.0 || r2y == 0.0 {
        let tag = if r12 == 0.0 { CaseTag::Orthogonal } else { CaseTag::Reduced };
        return Ok(GeomCase { tag, a1: None, a2: None, b1: None, b2: None });
    }
    let a1 = r12 * r1y / r2y;
    let a2 = r12 * r2y / r1y;
    let b1 = if a1 != 1.0 { Some(a1 * (1.0 - a2) / (1.0 - a1)) } else { None };
    let b2 = if a2 != 1.0 { Some(a2 * (1.0 - a1) / (1.0 - a2)) } else { None };
    let ratio = (r1y / r2y).abs().min((r2y / r1y).abs());
    let tag = if r12 == 0.0 {
        CaseTag::Orthogonal
    } else if a1 < 0.0 {
        CaseTag::Case1
    } else if (r12.abs() - ratio).abs() < BOUNDARY_TOL {
        CaseTag::Boundary
    } else if r12.abs() < ratio {
        CaseTag::Case2
    } else {
        CaseTag::Case3
    };
    Ok(GeomCase { tag, a1: Some(a1), a2: Some(a2), b1, b2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSystem {
    /// Triangle `(alpha_00, alpha_10, alpha_11)`.
    W1,
    /// Triangle `(alpha_00, alpha_01, alpha_11)`.
    W2,
    /// Triangle `(alpha_10, alpha_01, E)`.
    W3,
    /// Triangle `(alpha_00, alpha_10, E)`.
    W4,
    /// Triangle `(alpha_01, alpha_11, E)`.
    W5,
}

impl WeightSystem {
    pub const ALL: [WeightSystem; 5] = [WeightSystem::W1, WeightSystem::W2, WeightSystem::W3, WeightSystem::W4, WeightSystem::W5];

    /// Triangle vertices in the order of the returned weights.
    pub fn vertices(&self, pts: &AlphaPoints) -> [[f64; 2]; 3] {
        match self {
            WeightSystem::W1 => [pts.a00, pts.a10, pts.a11],
            WeightSystem::W2 => [pts.a00, pts.a01, pts.a11],
            WeightSystem::W3 => [pts.a10, pts.a01, pts.e()],
            WeightSystem::W4 => [pts.a00, pts.a10, pts.e()],
            WeightSystem::W5 => [pts.a01, pts.a11, pts.e()],
        }
    }
}

fn nonzero(v: f64, what: &str) -> Result<f64> {
    if v.abs() < 1e-14 {
        Err(Error::Degenerate(format!("degenerate geometry: {what} vanishes")))
    } else {
        Ok(v)
    }
}

/// Barycentric weights of `abar` in the triangle of `system`, ordered as in
/// [`WeightSystem::vertices`].
pub fn region_weights(abar: [f64; 2], pts: &AlphaPoints, system: WeightSystem) -> Result<[f64; 3]> {
    let (a, b, c, d) = (pts.a, pts.b, pts.c, pts.d);
    let [x, y] = abar;
    Ok(match system {
        WeightSystem::W1 => {
            let (a, d) = (nonzero(a, "a")?, nonzero(d, "d")?);
            [1.0 - x / a, x / a - y / d, y / d]
        }
        WeightSystem::W2 => {
            let den = nonzero(a * c - b * d, "ac - bd")?;
            [1.0 + ((d - c) * x + (b - a) * y) / den, (a * y - d * x) / den, (c * x - b * y) / den]
        }
        WeightSystem::W3 => {
            let den = nonzero(a * c + b * d - a * d, "ac + bd - ad")?;
            [
                ((2.0 * c - d) * x - (2.0 * b - a) * y - a * c + b * d) / den,
                (d * x + a * y - a * d) / den,
                2.0 * (a * c - c * x - (a - b) * y) / den,
            ]
        }
        WeightSystem::W4 => {
            let (a, d) = (nonzero(a, "a")?, nonzero(d, "d")?);
            [1.0 - x / a - y / d, x / a - y / d, 2.0 * y / d]
        }
        WeightSystem::W5 => {
            let den = nonzero(a * c - b * d, "ac - bd")?;
            [
                (a * y - d * x) / den,
                ((2.0 * c - d) * x - (2.0 * b - a) * y) / den - 1.0,
                2.0 * ((d - c) * x + (b - a) * y) / den + 2.0,
            ]
        }
    })
}

/// Pairwise risk differences expressed through the barycentric weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskDifferences {
    /// `R(M10) - R(M00)`
    pub d10_00: f64,
    /// `R(M01) - R(M00)`
    pub d01_00: f64,
    /// `R(M11) - R(M10)`
    pub d11_10: f64,
    /// `R(M11) - R(M01)`
    pub d11_01: f64,
    /// `R(M01) - R(M10)`
    pub d01_10: f64,
}

/// Risk differences (in squared alpha-distance units) from the weight systems.
pub fn risk_differences(pts: &AlphaPoints, abar: [f64; 2]) -> Result<RiskDifferences> {
    let (a, b, c, d) = (pts.a, pts.b, pts.c, pts.d);
    let w1 = region_weights(abar, pts, WeightSystem::W1)?;
    let w2 = region_weights(abar, pts, WeightSystem::W2)?;
    let w3 = region_weights(abar, pts, WeightSystem::W3)?;
    Ok(RiskDifferences {
        d10_00: 2.0 * a * a * (w1[0] - 0.5),
        d01_00: 2.0 * (b * b + c * c) * (w2[0] - 0.5),
        d11_10: 2.0 * d * d * (0.5 - w1[2]),
        d11_01: 2.0 * (a * a + d * d - b * b - c * c) * (0.5 - w2[2]),
        d01_10: ((a - b).powi(2) + c * c) * (w3[0] - w3[1]),
    })
}

fn model2(i: usize) -> Model {
    Model::new(MODELS2[i], 2).expect("two-covariate model")
}

/// Optimal model from the closed-form conditions on `(p00, p10, p01, p11)`.
///
/// Ties within [`BOUNDARY_TOL`] are reported as [`Error::Tie`].
pub fn optimal_from_conditions(probs: [f64; 4], r12: f64, r1y: f64, r2y: f64) -> Result<Model> {
    check_correlations(r12, r1y, r2y)?;
    if probs.iter().any(|p| !(*p >= -1e-15)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("{probs:?} is not a probability vector")));
    }
    if r1y == 0.0 || r2y == 0.0 {
        return Err(Error::Degenerate("a covariate is uncorrelated with the response".into()));
    }
    // Flipping a covariate's sign keeps every model probability and negates r12.
    let r12 = r12 * r1y.signum() * r2y.signum();
    let (mut r1, mut r2) = (r1y.abs(), r2y.abs());
    let [_, mut p10, mut p01, p11] = probs;
    let swapped = r1 > r2;
    if swapped {
        std::mem::swap(&mut r1, &mut r2);
        std::mem::swap(&mut p10, &mut p01);
    }
    let p1 = p10 + p11;
    let p2 = p01 + p11;
    let a1 = r12 * r1 / r2;
    let a2 = r12 * r2 / r1;
    let q = (r1 / r2).powi(2);
    let b1 = if (1.0 - a1).abs() > 1e-15 { a1 * (1.0 - a2) / (1.0 - a1) } else { f64::NAN };
    let b2 = if (1.0 - a2).abs() > 1e-15 { a2 * (1.0 - a1) / (1.0 - a2) } else { f64::NAN };
    let third = q * ((1.0 - a2) * p1 - 0.5) - ((1.0 - a1) * p2 - 0.5);
    // Each block lists margins that must be non-negative.
    let blocks: [Vec<f64>; 4] = [
        vec![0.5 - (p1 + p01 * a2), 0.5 - (p2 + p10 * a1)],
        vec![p1 + p01 * a2 - 0.5, 0.5 - (p2 + p01 * b1), third],
        vec![0.5 - (p1 + p10 * b2), p2 + p10 * a1 - 0.5, -third],
        vec![p2 + p01 * b1 - 0.5, p1 + p10 * b2 - 0.5],
    ];
    let unswap = |i: usize| if swapped { [0, 2, 1, 3][i] } else { i };
    let strict: Vec<usize> = (0..4).filter(|&i| blocks[i].iter().all(|&m| m > BOUNDARY_TOL)).collect();
    if strict.len() == 1 {
        return Ok(model2(unswap(strict[0])));
    }
    let weak: Vec<Model> = (0..4)
        .filter(|&i| blocks[i].iter().all(|&m| !(m < -BOUNDARY_TOL)))
        .map(|i| model2(unswap(i)))
        .collect();
    Err(Error::Tie(weak))
}

/// Index in `[M00, M10, M01, M11]` of the minimal distance, or `None` if the
/// two smallest are within `tol`.
pub fn euclidean_argmin(dist: &[f64; 4], tol: f64) -> Option<usize> {
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| dist[x].partial_cmp(&dist[y]).expect("finite distances"));
    if dist[order[1]] - dist[order[0]] <= tol {
        None
    } else {
        Some(order[0])
    }
}

/// Probability and correlation grids for [`mini_theorem_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub triples: Vec<[f64; 3]>,
    pub probabilities: Vec<[f64; 4]>,
}

impl ScanGrid {
    /// All compositions of `m` into four parts, nudged by `offset` so no
    /// inclusion or model probability sits exactly at 1/2.
    pub fn simplex(m: usize, offset: f64) -> Vec<[f64; 4]> {
        let mut out = Vec::new();
        let norm = 1.0 + 10.0 * offset;
        for k0 in 0..=m {
            for k1 in 0..=m - k0 {
                for k2 in 0..=m - k0 - k1 {
                    let k3 = m - k0 - k1 - k2;
                    let raw = [k0, k1, k2, k3];
                    let mut p = [0.0; 4];
                    for i in 0..4 {
                        p[i] = (raw[i] as f64 / m as f64 + offset * (i + 1) as f64) / norm;
                    }
                    out.push(p);
                }
            }
        }
        out
    }

    /// Correlation triples with entries drawn from `values` (and their
    /// negatives for the response correlations), kept when the correlation
    /// matrix has determinant above `min_det`.
    pub fn correlation_triples(values: &[f64], min_det: f64) -> Vec<[f64; 3]> {
        let signed: Vec<f64> = values.iter().flat_map(|&v| [-v, v]).collect();
        let mut out = Vec::new();
        for &r12 in &signed {
            for &r1y in &signed {
                for &r2y in &signed {
                    if corr_det(r12, r1y, r2y) > min_det {
                        out.push([r12, r1y, r2y]);
                    }
                }
            }
        }
        out
    }

    /// Default dense grid: about 3e5 cells per case.
    pub fn dense() -> Self {
        let values: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
        ScanGrid { triples: ScanGrid::correlation_triples(&values, 1e-6), probabilities: ScanGrid::simplex(16, 1e-6) }
    }
}

/// A cell where a statement of the two-covariate theorem fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub statement: usize,
    pub triple: [f64; 3],
    pub probs: [f64; 4],
    pub case: CaseTag,
    pub optimal: Model,
    pub mpm: Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// Evaluated cells for Case 1, 2, 3.
    pub cells_per_case: [usize; 3],
    /// Cells skipped as boundary (tied risks, inclusion at 1/2, boundary case).
    pub boundary_skipped: usize,
    /// How often the premise of each statement held.
    pub fired: [usize; 7],
    pub violation_counts: [usize; 7],
    /// Up to the first 100 violations with context.
    pub violations: Vec<Violation>,
}

impl ScanReport {
    pub fn total_violations(&self) -> usize {
        self.violation_counts.iter().sum()
    }
}

#[derive(Default)]
struct Partial {
    cells: [usize; 3],
    skipped: usize,
    fired: [usize; 7],
    counts: [usize; 7],
    violations: Vec<Violation>,
}

/// Checks the seven statements of the two-covariate theorem against the
/// Euclidean risk minimizer on every grid cell.
pub fn mini_theorem_scan(grid: &ScanGrid) -> ScanReport {
    let parts: Vec<Partial> = grid
        .triples
        .par_iter()
        .map(|&[r12, r1y, r2y]| {
            let mut acc = Partial::default();
            let (case, pts) = match (classify_case(r12, r1y, r2y), alpha_points(r12, r1y, r2y)) {
                (Ok(c), Ok(p)) => (c.tag, p),
                _ => {
                    acc.skipped += grid.probabilities.len();
                    return acc;
                }
            };
            let ci = match case {
                CaseTag::Case1 => 0,
                CaseTag::Case2 => 1,
                CaseTag::Case3 => 2,
                _ => {
                    acc.skipped += grid.probabilities.len();
                    return acc;
                }
            };
            let scale = pts.all().iter().map(|p| p[0] * p[0] + p[1] * p[1]).fold(0.0, f64::max);
            for probs in &grid.probabilities {
                let dist = pts.distances(pts.average(probs));
                let p1 = probs[1] + probs[3];
                let p2 = probs[2] + probs[3];
                let near = |v: f64| (v - 0.5).abs() < BOUNDARY_TOL;
                let o = match euclidean_argmin(&dist, BOUNDARY_TOL * scale) {
                    Some(o) if !near(p1) && !near(p2) && !near(probs[0]) && !near(probs[3]) => o,
                    _ => {
                        acc.skipped += 1;
                        continue;
                    }
                };
                acc.cells[ci] += 1;
                let mpm = (p1 > 0.5) as usize + 2 * (p2 > 0.5) as usize;
                let above = (p1 > 0.5) as usize + (p2 > 0.5) as usize;
                let checks = [
                    (0, ci == 0 && mpm == 0, o == 0),
                    (1, ci == 1 && mpm == 3, o == 3),
                    (2, ci != 1 && above <= 1, o != 3),
                    (3, ci != 0 && above >= 1, o != 0),
                    (4, ci != 2 && probs[0] > 0.5, o == 0),
                    (4, ci != 2 && probs[3] > 0.5, o == 3),
                    (5, probs[0] > 0.5, o != 3),
                    (5, probs[3] > 0.5, o != 0),
                    (6, ci == 2 && probs[0] < 0.5, o != 0),
                    (6, ci == 2 && probs[3] < 0.5, o != 3),
                ];
                for (s, premise, ok) in checks {
                    if premise {
                        acc.fired[s] += 1;
                        if !ok {
                            acc.counts[s] += 1;
                            if acc.violations.len() < 100 {
                                acc.violations.push(Violation {
                                    statement: s + 1,
                                    triple: [r12, r1y, r2y],
                                    probs: *probs,
                                    case,
                                    optimal: model2(o),
                                    mpm: model2(mpm),
                                });
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut report = ScanReport { cells_per_case: [0; 3], boundary_skipped: 0, fired: [0; 7], violation_counts: [0; 7], violations: Vec::new() };
    for part in parts {
        for i in 0..3 {
            report.cells_per_case[i] += part.cells[i];
        }
        for i in 0..7 {
            report.fired[i] += part.fired[i];
            report.violation_counts[i] += part.counts[i];
        }
        report.boundary_skipped += part.skipped;
        for v in part.violations {
            if report.violations.len() < 100 {
                report.violations.push(v);
            }
        }
    }
    report
}
