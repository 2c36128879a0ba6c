//! Reference image metrics and training losses.
//!
//! These are the non-differentiable definitions a trainer's differentiable
//! versions are checked against. Conventions:
//!
//! * SSIM: 11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03, dynamic
//!   range 4.0, half-sample symmetric padding (`dcba|abcd`), mean of the map.
//! * TV: forward differences with zero difference across the last row and
//!   column, `sqrt(Δx² + Δy² + ε²)` with ε = 1e-8, averaged over all pixels.
//! * Field loss: `(1/P) Σ_p ‖G_D·((pred − truth) ⊙ E_tot,p)‖² / N` with the
//!   total field of the true contrast held fixed.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::FieldSet;
use crate::grid::RealGrid;
use crate::operators::OperatorPair;

pub const TV_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 4.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1D Gaussian taps; the 2D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let c = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// Half-sample symmetric index folding, valid for any offset.
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let k = i.rem_euclid(period);
    if k < n as isize {
        k as usize
    } else {
        (period - 1 - k) as usize
    }
}

fn gaussian_filter(img: &[f64], n: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut rows = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let jj = reflect_index(j as isize + t as isize - r, n);
                acc += w * img[i * n + jj];
            }
            rows[i * n + j] = acc;
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let ii = reflect_index(i as isize + t as isize - r, n);
                acc += w * rows[ii * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

pub fn rmse(pred: &RealGrid, truth: &RealGrid) -> Result<f64> {
    pred.check_same_shape(truth)?;
    let sse: f64 = pred
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Local SSIM map.
pub fn ssim_map(pred: &RealGrid, truth: &RealGrid, params: &SsimParams) -> Result<RealGrid> {
    pred.check_same_shape(truth)?;
    let n = pred.side();
    let taps = params.taps();
    let (x, y) = (pred.values(), truth.values());
    let sq = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u * v).collect() };
    let mu_x = gaussian_filter(x, n, &taps);
    let mu_y = gaussian_filter(y, n, &taps);
    let xx = gaussian_filter(&sq(x, x), n, &taps);
    let yy = gaussian_filter(&sq(y, y), n, &taps);
    let xy = gaussian_filter(&sq(x, y), n, &taps);
    let (c1, c2) = (params.c1(), params.c2());
    let values = (0..n * n)
        .map(|m| {
            let (mx, my) = (mu_x[m], mu_y[m]);
            let sx = xx[m] - mx * mx;
            let sy = yy[m] - my * my;
            let sxy = xy[m] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2))
        })
        .collect();
    RealGrid::new(n, values)
}

pub fn ssim(pred: &RealGrid, truth: &RealGrid, params: &SsimParams) -> Result<f64> {
    let map = ssim_map(pred, truth, params)?;
    Ok(map.values().iter().sum::<f64>() / map.len() as f64)
}

pub fn tv(map: &RealGrid) -> f64 {
    let n = map.side();
    let v = map.values();
    let eps2 = TV_EPSILON * TV_EPSILON;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let here = v[i * n + j];
            let dx = if j + 1 < n { v[i * n + j + 1] - here } else { 0.0 };
            let dy = if i + 1 < n { v[(i + 1) * n + j] - here } else { 0.0 };
            total += (dx * dx + dy * dy + eps2).sqrt();
        }
    }
    total / (n * n) as f64
}

fn check_operator(map: &RealGrid, fields: &FieldSet, ops: &OperatorPair) -> Result<()> {
    if map.len() != ops.cell_count() || fields.cell_count() != ops.cell_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} cells", ops.cell_count()),
            found: format!("map {} / fields {}", map.len(), fields.cell_count()),
        });
    }
    Ok(())
}

/// Σ_p ‖G_D·(weights ⊙ E_tot,p)‖².
fn radiated_energy(weights: &[f64], total: &Mat<Complex64>, ops: &OperatorPair) -> f64 {
    let sources = Mat::from_fn(total.nrows(), total.ncols(), |m, p| total[(m, p)] * weights[m]);
    (&ops.g_domain * &sources).norm_l2().powi(2)
}

pub fn field_loss(
    pred: &RealGrid,
    truth: &RealGrid,
    fields: &FieldSet,
    ops: &OperatorPair,
) -> Result<f64> {
    pred.check_same_shape(truth)?;
    check_operator(pred, fields, ops)?;
    let total = fields.total()?;
    let diff: Vec<f64> = pred.values().iter().zip(truth.values()).map(|(a, b)| a - b).collect();
    let energy = radiated_energy(&diff, total, ops);
    Ok(energy / (fields.n_tx() * pred.len()) as f64)
}

/// ‖χ‖² / Σ_p ‖G_D·(χ ⊙ E_tot,p)‖². `+∞` for a zero scatterer.
pub fn alpha_balance(truth: &RealGrid, fields: &FieldSet, ops: &OperatorPair) -> Result<f64> {
    check_operator(truth, fields, ops)?;
    let total = fields.total()?;
    let energy = radiated_energy(truth.values(), total, ops);
    if energy == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(truth.sum_squares() / energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub contrast: f64,
    pub ssim_term: f64,
    pub field: f64,
    pub tv: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mix_total: f64,
}

impl LossBreakdown {
    /// Contrast misfit plus the SSIM penalty.
    pub fn ssim_loss(&self) -> f64 {
        self.contrast + self.ssim_term
    }

    /// α·L_field, taken as zero when α is the +∞ sentinel (empty truth).
    pub fn weighted_field(&self) -> f64 {
        if self.alpha.is_finite() {
            self.alpha * self.field
        } else {
            0.0
        }
    }
}

pub fn loss_eval(
    pred: &RealGrid,
    truth: &RealGrid,
    fields: &FieldSet,
    ops: &OperatorPair,
    beta: f64,
    params: &SsimParams,
) -> Result<LossBreakdown> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange(beta));
    }
    pred.check_same_shape(truth)?;
    let contrast = rmse(pred, truth)?.powi(2);
    let s = ssim(pred, truth, params)?;
    let field = field_loss(pred, truth, fields, ops)?;
    let alpha = alpha_balance(truth, fields, ops)?;
    let mut out = LossBreakdown {
        contrast,
        ssim_term: 1.0 - s * s,
        field,
        tv: tv(pred),
        alpha,
        beta,
        mix_total: 0.0,
    };
    out.mix_total = out.ssim_loss() + out.weighted_field() + beta * out.tv;
    Ok(out)
}
