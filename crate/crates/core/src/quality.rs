//! Quality factor Q_BP = SSIM/RMSE of the BP image, quality categories and
//! training-set composition.

use std::fmt;

use faer::Mat;
use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bp::BpImage;
use crate::error::{Error, Result};
use crate::forward::ScatterMatrix;
use crate::grid::ContrastMap;
use crate::metrics::{rmse, ssim, SsimParams};

/// Share of the composed set drawn from excellent, good, fair and poor.
pub const QBP_PROPORTIONS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Excellent,
    Good,
    Fair,
    Poor,
    Unassigned,
}

impl Category {
    pub const RANKED: [Category; 4] = [Category::Excellent, Category::Good, Category::Fair, Category::Poor];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Excellent => "excellent",
            Category::Good => "good",
            Category::Fair => "fair",
            Category::Poor => "poor",
            Category::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
}

/// One dataset entry. `scatter_noisy` and `bp` are absent in containers that
/// only carry contrast maps (for example network predictions).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub truth: ContrastMap,
    pub scatter_noisy: Option<ScatterMatrix>,
    pub bp: Option<BpImage>,
    pub q_bp: f64,
    pub category: Category,
    pub snr_db: f64,
    pub provenance: Provenance,
    /// Permittivity of each homogeneous component, in drawing order.
    pub eps_r: Vec<f64>,
    /// Field-loss balance weight of the true contrast.
    pub alpha: f64,
    /// Total field of the clean forward solve, `cells × n_tx`.
    pub total_field: Option<Mat<Complex64>>,
}

impl SampleRecord {
    /// A record holding only a contrast map.
    pub fn contrast_only(id: impl Into<String>, truth: ContrastMap) -> Self {
        SampleRecord {
            id: id.into(),
            truth,
            scatter_noisy: None,
            bp: None,
            q_bp: 0.0,
            category: Category::Unassigned,
            snr_db: f64::INFINITY,
            provenance: Provenance {
                generator: "external".into(),
                seed: 0,
            },
            eps_r: Vec::new(),
            alpha: f64::NAN,
            total_field: None,
        }
    }

    pub fn max_eps(&self) -> f64 {
        self.eps_r.iter().copied().fold(1.0, f64::max)
    }
}

/// SSIM/RMSE of max(Re(bp), 0) against the truth; `+∞` when RMSE is zero.
pub fn quality_factor(truth: &ContrastMap, bp: &BpImage, params: &SsimParams) -> Result<f64> {
    let scored = bp.scored();
    let e = rmse(&scored, truth)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(quality_ratio(ssim(&scored, truth, params)?, e))
}

pub fn quality_ratio(ssim: f64, rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        ssim / rmse
    }
}

/// Sort by Q_BP (descending, ties by id) and split into four equal groups.
pub fn categorize(samples: &mut [SampleRecord]) -> Result<()> {
    let n = samples.len();
    if !n.is_multiple_of(4) {
        return Err(Error::IndivisibleCount(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .q_bp
            .total_cmp(&samples[a].q_bp)
            .then_with(|| samples[a].id.cmp(&samples[b].id))
    });
    let quarter = n / 4;
    for (rank, &i) in order.iter().enumerate() {
        samples[i].category = Category::RANKED[rank / quarter.max(1)];
    }
    Ok(())
}

/// Per-category counts: round-half-to-even for the first three, the
/// remainder to `poor`.
pub fn composition_counts(target_n: usize, proportions: [f64; 4]) -> Result<[usize; 4]> {
    if proportions.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidProportions(format!("{proportions:?}")));
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProportions(format!("{proportions:?} sums to {total}")));
    }
    let mut counts = [0usize; 4];
    let mut assigned = 0usize;
    for k in 0..3 {
        counts[k] = (proportions[k] * target_n as f64).round_ties_even() as usize;
        assigned += counts[k];
    }
    if assigned > target_n {
        return Err(Error::InvalidProportions(format!(
            "{proportions:?} over-allocates {target_n} samples"
        )));
    }
    counts[3] = target_n - assigned;
    Ok(counts)
}

fn members(samples: &[SampleRecord], category: Category) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.category == category)
        .map(|(i, _)| i)
        .collect()
}

/// Quality-stratified selection: indices into `samples`, grouped by category
/// from excellent to poor. Each group is a uniform draw without replacement.
pub fn compose(samples: &[SampleRecord], target_n: usize, proportions: [f64; 4], seed: u64) -> Result<Vec<usize>> {
    if let Some(s) = samples.iter().find(|s| s.category == Category::Unassigned) {
        return Err(Error::Uncategorized(s.id.clone()));
    }
    let counts = composition_counts(target_n, proportions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(target_n);
    for (category, need) in Category::RANKED.into_iter().zip(counts) {
        let pool = members(samples, category);
        if pool.len() < need {
            return Err(Error::InsufficientCategory {
                category: category.as_str(),
                needed: need,
                available: pool.len(),
            });
        }
        picked.extend(index::sample(&mut rng, pool.len(), need).into_iter().map(|k| pool[k]));
    }
    Ok(picked)
}

/// Uniform selection without replacement over the whole population.
pub fn compose_uniform(samples: &[SampleRecord], target_n: usize, seed: u64) -> Result<Vec<usize>> {
    if target_n > samples.len() {
        return Err(Error::InsufficientSamples {
            requested: target_n,
            available: samples.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, samples.len(), target_n).into_vec())
}

pub fn category_histogram(samples: &[SampleRecord]) -> [usize; 5] {
    let mut h = [0usize; 5];
    for s in samples {
        h[s.category as usize] += 1;
    }
    h
}
