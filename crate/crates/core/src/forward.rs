//! Method-of-moments forward scattering.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::grid::ContrastMap;
use crate::operators::OperatorPair;
use crate::special::hankel2;

/// Per-transmitter fields on the DOI grid. Column `p` holds transmitter `p`,
/// rows follow the row-major cell order.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub incident: Mat<Complex64>,
    pub total: Option<Mat<Complex64>>,
    pub induced_current: Option<Mat<Complex64>>,
}

impl FieldSet {
    pub fn n_tx(&self) -> usize {
        self.incident.ncols()
    }

    pub fn cell_count(&self) -> usize {
        self.incident.nrows()
    }

    pub fn total(&self) -> Result<&Mat<Complex64>> {
        self.total.as_ref().ok_or(Error::MissingFields)
    }
}

/// Received scattered field, `n_rx × n_tx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    pub values: Mat<Complex64>,
}

impl ScatterMatrix {
    pub fn zeros(n_rx: usize, n_tx: usize) -> Self {
        ScatterMatrix {
            values: Mat::zeros(n_rx, n_tx),
        }
    }

    pub fn n_rx(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.values.ncols()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.norm_l2()
    }

    /// Mean |entry|².
    pub fn mean_power(&self) -> f64 {
        let n = (self.n_rx() * self.n_tx()) as f64;
        self.norm().powi(2) / n
    }

    pub fn transpose(&self) -> ScatterMatrix {
        ScatterMatrix {
            values: self.values.transpose().to_owned(),
        }
    }

    pub fn sub(&self, other: &ScatterMatrix) -> ScatterMatrix {
        ScatterMatrix {
            values: &self.values - &other.values,
        }
    }

    /// ‖self − reference‖ / ‖reference‖.
    pub fn relative_error(&self, reference: &ScatterMatrix) -> f64 {
        self.sub(reference).norm() / reference.norm()
    }
}

/// Unit-amplitude line-source illumination, `(j/4)·H0⁽²⁾(k|r − r_p|)`.
pub fn incident_fields(geom: &Geometry, cfg: &PhysicsConfig) -> Result<FieldSet> {
    let k = cfg.k_background();
    let cells = geom.cell_count();
    let n_tx = geom.tx_positions.len();
    let mut incident = Mat::zeros(cells, n_tx);
    for (p, tx) in geom.tx_positions.iter().enumerate() {
        for (m, c) in geom.cell_centers.iter().enumerate() {
            let d = tx.distance(c);
            if d <= f64::EPSILON * tx.norm().max(1.0) {
                return Err(Error::SingularSource { tx: p, cell: m });
            }
            incident[(m, p)] = Complex64::new(0.0, 0.25) * hankel2(0, k * d);
        }
    }
    Ok(FieldSet {
        incident,
        total: None,
        induced_current: None,
    })
}

fn check_dims(chi: &ContrastMap, ops: &OperatorPair, inc: &FieldSet) -> Result<()> {
    let cells = ops.cell_count();
    if chi.len() != cells || inc.cell_count() != cells {
        return Err(Error::DimensionMismatch {
            expected: format!("{cells} cells"),
            found: format!("contrast {} / fields {}", chi.len(), inc.cell_count()),
        });
    }
    Ok(())
}

/// Solves `(I − G_D·diag(χ))·E_tot = E_inc` for every transmitter and
/// radiates the induced currents to the receivers.
///
/// Columns of `G_D·diag(χ)` vanish wherever χ = 0, so the system is block
/// triangular: only the cells in the support of χ are coupled. Those are
/// solved with one dense LU shared by all transmitters; the remaining cells
/// follow by substitution. The result equals the full `N × N` solve.
pub fn solve_forward(
    chi: &ContrastMap,
    ops: &OperatorPair,
    inc: &FieldSet,
) -> Result<(FieldSet, ScatterMatrix)> {
    check_dims(chi, ops, inc)?;
    let cells = ops.cell_count();
    let n_tx = inc.n_tx();
    let support = chi.support();

    if support.is_empty() {
        return Ok((
            FieldSet {
                incident: inc.incident.clone(),
                total: Some(inc.incident.clone()),
                induced_current: Some(Mat::zeros(cells, n_tx)),
            },
            ScatterMatrix::zeros(ops.n_rx(), n_tx),
        ));
    }

    let chi_s: Vec<f64> = support.iter().map(|&m| chi.values()[m]).collect();
    let s = support.len();
    let system = Mat::from_fn(s, s, |a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - ops.g_domain[(support[a], support[b])] * chi_s[b]
    });
    let lu = system.partial_piv_lu();
    check_factorization(lu.U())?;

    let rhs = Mat::from_fn(s, n_tx, |a, p| inc.incident[(support[a], p)]);
    let total_s = lu.solve(&rhs);
    let current_s = Mat::from_fn(s, n_tx, |a, p| total_s[(a, p)] * chi_s[a]);

    let coupling = Mat::from_fn(cells, s, |m, b| ops.g_domain[(m, support[b])]);
    let mut total = &inc.incident + &coupling * &current_s;
    for (a, &m) in support.iter().enumerate() {
        for p in 0..n_tx {
            total[(m, p)] = total_s[(a, p)];
        }
    }

    let mut current = Mat::zeros(cells, n_tx);
    for (a, &m) in support.iter().enumerate() {
        for p in 0..n_tx {
            current[(m, p)] = current_s[(a, p)];
        }
    }

    let radiating = Mat::from_fn(ops.n_rx(), s, |q, b| ops.g_surface[(q, support[b])]);
    let scatter = ScatterMatrix {
        values: &radiating * &current_s,
    };

    Ok((
        FieldSet {
            incident: inc.incident.clone(),
            total: Some(total),
            induced_current: Some(current),
        },
        scatter,
    ))
}

fn check_factorization(u: faer::MatRef<'_, Complex64>) -> Result<()> {
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_estimate = max / min;
    if !condition_estimate.is_finite() || condition_estimate > 1e14 {
        return Err(Error::SingularSystem { condition_estimate });
    }
    Ok(())
}

/// First-order Born approximation `G_S·(χ ⊙ E_inc)`.
pub fn born_scatter(chi: &ContrastMap, ops: &OperatorPair, inc: &FieldSet) -> Result<ScatterMatrix> {
    check_dims(chi, ops, inc)?;
    let weighted = Mat::from_fn(inc.cell_count(), inc.n_tx(), |m, p| {
        inc.incident[(m, p)] * chi.values()[m]
    });
    Ok(ScatterMatrix {
        values: &ops.g_surface * &weighted,
    })
}
