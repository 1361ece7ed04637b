//! Deterministic two-covariate numerical study over correlation grids.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coef::{CoefPrior, SigmaMode};
use crate::design::DesignStats;
use crate::error::{Error, Result};
use crate::geometry2d::{classify_case, CaseTag};
use crate::model::Model;
use crate::posterior::posterior_summary;
use crate::priors::ModelPrior;
use crate::risk::{posterior_means, risk_report};

/// Default PSD filter on the 3x3 correlation matrix.
pub const MIN_DET: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FullModel,
    OneVariable,
    NullModel,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::FullModel, Scenario::OneVariable, Scenario::NullModel];

    pub fn short_name(&self) -> &'static str {
        match self {
            Scenario::FullModel => "full",
            Scenario::OneVariable => "onevar",
            Scenario::NullModel => "null",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" | "full_model" => Ok(Scenario::FullModel),
            "onevar" | "one_variable" => Ok(Scenario::OneVariable),
            "null" | "null_model" => Ok(Scenario::NullModel),
            other => Err(Error::Domain(format!("unknown scenario '{other}'"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Default r12 grid: +-0.1, ..., +-0.9.
pub fn default_r12_grid() -> Vec<f64> {
    let pos: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    pos.iter().rev().map(|v| -v).chain(pos.iter().copied()).collect()
}

/// The study always uses g = n, Jeffreys sigma and equal prior weight on the
/// four models; only the grid is configurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub sample_sizes: Vec<usize>,
    pub r12_grid: Vec<f64>,
    #[serde(default = "default_min_det")]
    pub min_det: f64,
}

fn default_min_det() -> f64 {
    MIN_DET
}

impl StudyConfig {
    pub fn new(scenario: Scenario, sample_sizes: Vec<usize>) -> Self {
        StudyConfig { scenario, sample_sizes, r12_grid: default_r12_grid(), min_det: MIN_DET }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() || self.r12_grid.is_empty() {
            return Err(Error::Domain("study grids must be nonempty".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 3) {
            return Err(Error::Domain(format!("sample size {n} is too small")));
        }
        if self.r12_grid.iter().any(|r| !r.is_finite() || r.abs() >= 1.0) {
            return Err(Error::Domain("r12 values must lie in (-1, 1)".into()));
        }
        if !(self.min_det >= 0.0) {
            return Err(Error::Domain("min_det must be non-negative".into()));
        }
        Ok(())
    }
}

fn det3(r12: f64, r1y: f64, r2y: f64) -> f64 {
    1.0 - r12 * r12 - r1y * r1y - r2y * r2y + 2.0 * r12 * r1y * r2y
}

fn ordered_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &a in values {
        for &b in values {
            if a <= b + 1e-12 {
                out.push((a, b));
            }
        }
    }
    out
}

fn grid_with(scenario: Scenario, n: usize, r12s: &[f64], min_det: f64) -> Vec<[f64; 3]> {
    let base: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let root = (n as f64).sqrt();
    let mut out = Vec::new();
    for &r12 in r12s {
        let pairs = match scenario {
            Scenario::FullModel => ordered_pairs(&base),
            Scenario::NullModel => {
                let h: Vec<f64> = (1..10).map(|i| 0.2 * i as f64 / root).collect();
                ordered_pairs(&h)
            }
            Scenario::OneVariable => {
                let mut v = Vec::new();
                for &b in &base {
                    for h in [-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9] {
                        let a = r12 * b + h / root;
                        if a > 0.0 && a <= b + 1e-12 {
                            v.push((a, b));
                        }
                    }
                }
                v
            }
        };
        for (a, b) in pairs {
            if det3(r12, a, b) > min_det {
                out.push([r12, a, b]);
            }
        }
    }
    out
}

/// Correlation triples `(r12, r1y, r2y)` of a scenario at sample size `n`.
pub fn correlation_grid(scenario: Scenario, n: usize) -> Vec<[f64; 3]> {
    grid_with(scenario, n, &default_r12_grid(), MIN_DET)
}

/// Outcome of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub n: usize,
    pub triple: [f64; 3],
    pub case: u8,
    /// Posterior probabilities of `[00, 10, 01, 11]`.
    pub probs: [f64; 4],
    pub risk: [f64; 4],
    pub mpm: Model,
    pub hpm: Model,
    pub optimal: Model,
    pub category: Category,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub n: usize,
    pub triple: [f64; 3],
    pub reason: String,
}

/// Agreement pattern between MPM (M), HPM (H) and the optimal model (O).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Mho,
    MhNotO,
    MoNotH,
    HoNotM,
    /// Both differ from O and HPM has the lower risk.
    HBetter,
    /// Both differ from O and MPM has the lower (or equal) risk.
    MBetter,
}

impl Category {
    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scenario: Scenario,
    /// `None` for rows pooled over cases.
    pub case: Option<u8>,
    /// `None` for rows pooled over sample sizes.
    pub n: Option<usize>,
    pub cells: usize,
    /// Counts in the order M=H=O, M=H!=O, M=O!=H, H=O!=M, H>M, M>H.
    pub counts: [usize; 6],
    pub percentages: [f64; 6],
    /// Geometric mean of R(MPM)/R(O) over all cells (ratio 1 where MPM is optimal).
    pub gm_mpm: f64,
    pub gm_hpm: f64,
    /// Geometric means restricted to cells where the model is not optimal.
    pub gm_mpm_suboptimal: Option<f64>,
    pub gm_hpm_suboptimal: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub config: StudyConfig,
    /// One row per (case, n), then a pooled row per n.
    pub rows: Vec<StudyRow>,
    pub overall: StudyRow,
    pub skipped: Vec<SkippedCell>,
    pub cells: Vec<CellOutcome>,
}

fn evaluate_cell(n: usize, [r12, r1y, r2y]: [f64; 3]) -> std::result::Result<CellOutcome, String> {
    let case = match classify_case(r12, r1y, r2y).map_err(|e| e.to_string())?.tag {
        CaseTag::Case1 => 1,
        CaseTag::Case2 => 2,
        CaseTag::Case3 => 3,
        other => return Err(format!("{other:?} cell")),
    };
    let run = || -> Result<CellOutcome> {
        let stats = DesignStats::from_correlations(r12, r1y, r2y, n)?;
        let prior = CoefPrior::g_prior(n as f64, SigmaMode::Jeffreys)?;
        let post = posterior_summary(&stats, &prior, &ModelPrior::UniformOverModels, None)?;
        let means = posterior_means(&stats, &post, &prior)?;
        let rep = risk_report(&stats, &post, &means)?;
        let (m, h, o) = (rep.mpm, rep.hpm, rep.optimal);
        let category = if m == o && h == o {
            Category::Mho
        } else if m == h {
            Category::MhNotO
        } else if m == o {
            Category::MoNotH
        } else if h == o {
            Category::HoNotM
        } else if rep.risk_of(&h) < rep.risk_of(&m) {
            Category::HBetter
        } else {
            Category::MBetter
        };
        let arr = |v: &[f64]| [v[0], v[1], v[2], v[3]];
        Ok(CellOutcome {
            n,
            triple: [r12, r1y, r2y],
            case,
            probs: arr(&post.probs),
            risk: arr(&rep.risk),
            mpm: m,
            hpm: h,
            optimal: o,
            category,
        })
    };
    run().map_err(|e| e.to_string())
}

fn log_ratio(cell: &CellOutcome, m: &Model) -> f64 {
    if m == &cell.optimal {
        0.0
    } else {
        (cell.risk[m.index()] / cell.risk[cell.optimal.index()]).ln()
    }
}

fn aggregate<'a>(scenario: Scenario, case: Option<u8>, n: Option<usize>, cells: impl Iterator<Item = &'a CellOutcome>) -> StudyRow {
    let mut counts = [0usize; 6];
    let (mut lm, mut lh) = (0.0, 0.0);
    let (mut sm, mut nm, mut sh, mut nh) = (0.0, 0usize, 0.0, 0usize);
    let mut total = 0;
    for c in cells {
        total += 1;
        counts[c.category.slot()] += 1;
        let (a, b) = (log_ratio(c, &c.mpm), log_ratio(c, &c.hpm));
        lm += a;
        lh += b;
        if c.mpm != c.optimal {
            sm += a;
            nm += 1;
        }
        if c.hpm != c.optimal {
            sh += b;
            nh += 1;
        }
    }
    let gm = |s: f64, k: usize| if k == 0 { 1.0 } else { (s / k as f64).exp() };
    let percentages = counts.map(|c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 });
    StudyRow {
        scenario,
        case,
        n,
        cells: total,
        counts,
        percentages,
        gm_mpm: gm(lm, total),
        gm_hpm: gm(lh, total),
        gm_mpm_suboptimal: (nm > 0).then(|| gm(sm, nm)),
        gm_hpm_suboptimal: (nh > 0).then(|| gm(sh, nh)),
    }
}

/// Runs every grid cell of the configured scenario. Cells are evaluated in
/// parallel but aggregated in grid order, so results do not depend on the
/// thread count.
pub fn run_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let jobs: Vec<(usize, [f64; 3])> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| grid_with(config.scenario, n, &config.r12_grid, config.min_det).into_iter().map(move |t| (n, t)))
        .collect();
    let results: Vec<_> = jobs.par_iter().map(|&(n, t)| (n, t, evaluate_cell(n, t))).collect();
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (n, triple, r) in results {
        match r {
            Ok(c) => cells.push(c),
            Err(reason) => skipped.push(SkippedCell { n, triple, reason }),
        }
    }
    let sc = config.scenario;
    let mut rows = Vec::new();
    for &n in &config.sample_sizes {
        for case in 1..=3u8 {
            rows.push(aggregate(sc, Some(case), Some(n), cells.iter().filter(|c| c.n == n && c.case == case)));
        }
    }
    for &n in &config.sample_sizes {
        rows.push(aggregate(sc, None, Some(n), cells.iter().filter(|c| c.n == n)));
    }
    for case in 1..=3u8 {
        rows.push(aggregate(sc, Some(case), None, cells.iter().filter(|c| c.case == case)));
    }
    let overall = aggregate(sc, None, None, cells.iter());
    Ok(StudyTable { config: config.clone(), rows, overall, skipped, cells })
}

impl StudyTable {
    pub fn row(&self, case: Option<u8>, n: Option<usize>) -> Option<&StudyRow> {
        self.rows.iter().chain(std::iter::once(&self.overall)).find(|r| r.case == case && r.n == n)
    }

    /// CSV with one line per row plus the overall row; pooled fields are `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,case,n,MHO,MH_notO,MO_notH,HO_notM,HgtM,MgtH,gm_mpm,gm_hpm\n");
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            let case = r.case.map_or("all".to_string(), |c| c.to_string());
            let n = r.n.map_or("all".to_string(), |n| n.to_string());
            let c = r.counts;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.scenario, case, n, c[0], c[1], c[2], c[3], c[4], c[5], r.gm_mpm, r.gm_hpm
            ));
        }
        out
    }
}
