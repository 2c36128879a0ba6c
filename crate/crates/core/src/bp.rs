//! Non-iterative back-propagation (BP) initial imaging.
//!
//! For each transmitter the induced current is taken proportional to the
//! adjoint-radiated data, `J_p = γ_p·G_Sᴴ·E_sca,p`, with γ_p the least-squares
//! fit of `G_S·J_p` to the data:
//!
//! ```text
//! γ_p = ⟨G_S G_Sᴴ E_sca,p , E_sca,p⟩ / ‖G_S G_Sᴴ E_sca,p‖²,   ⟨u, v⟩ = Σ conj(u)·v
//! ```
//!
//! The total field follows from the state equation and the contrast is
//! recovered pixel by pixel from `J = χ·E_tot` in the least-squares sense
//! over transmitters.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{FieldSet, ScatterMatrix};
use crate::grid::{ComplexGrid, ContrastMap, RealGrid};
use crate::operators::OperatorPair;

/// Complex BP estimate of the contrast. Real and imaginary parts are kept
/// as computed; use [`BpImage::scored`] for the clamped real image.
#[derive(Debug, Clone, PartialEq)]
pub struct BpImage {
    pub image: ComplexGrid,
    /// Pixels where Σ_p |E_tot,p|² vanished; they are set to zero.
    pub degenerate_pixels: Vec<usize>,
}

impl BpImage {
    pub fn side(&self) -> usize {
        self.image.side()
    }

    /// max(Re(BP), 0), the real image used for display and scoring.
    pub fn scored(&self) -> ContrastMap {
        ContrastMap::clamped(&self.image.real())
    }

    pub fn real(&self) -> RealGrid {
        self.image.real()
    }
}

/// Least-squares scale of the back-projected data for one transmitter.
pub fn backprojection_scale(g_surface: &Mat<Complex64>, data: &[Complex64]) -> Complex64 {
    let e = Mat::from_fn(data.len(), 1, |i, _| data[i]);
    let fitted = g_surface * (g_surface.adjoint() * &e);
    lsq_scale((0..data.len()).map(|i| (fitted[(i, 0)], data[i])))
}

// argmin_γ ‖data − γ·fitted‖², zero when the fit vanishes.
fn lsq_scale(pairs: impl Iterator<Item = (Complex64, Complex64)>) -> Complex64 {
    let (num, denom) = pairs.fold((Complex64::new(0.0, 0.0), 0.0), |(num, den), (a, d)| {
        (num + a.conj() * d, den + a.norm_sqr())
    });
    if denom > 0.0 {
        num / denom
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub fn backpropagate(scatter: &ScatterMatrix, ops: &OperatorPair, inc: &FieldSet) -> Result<BpImage> {
    let cells = ops.cell_count();
    let n_tx = scatter.n_tx();
    if scatter.n_rx() != ops.n_rx() || inc.n_tx() != n_tx || inc.cell_count() != cells {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {} data for {cells} cells", ops.n_rx(), inc.n_tx()),
            found: format!(
                "{} x {} data, fields for {} cells",
                scatter.n_rx(),
                n_tx,
                inc.cell_count()
            ),
        });
    }
    let side = (cells as f64).sqrt().round() as usize;

    let back = ops.g_surface.adjoint() * &scatter.values;
    let refit = &ops.g_surface * &back;
    let mut current = back;
    for p in 0..n_tx {
        let gamma = lsq_scale((0..scatter.n_rx()).map(|q| (refit[(q, p)], scatter.values[(q, p)])));
        for m in 0..cells {
            current[(m, p)] *= gamma;
        }
    }

    let total = &inc.incident + &ops.g_domain * &current;

    let mut values = Vec::with_capacity(cells);
    let mut degenerate_pixels = Vec::new();
    for m in 0..cells {
        let mut num = Complex64::new(0.0, 0.0);
        let mut denom = 0.0;
        for p in 0..n_tx {
            let e = total[(m, p)];
            num += current[(m, p)] * e.conj();
            denom += e.norm_sqr();
        }
        if denom > 0.0 {
            values.push(num / denom);
        } else {
            degenerate_pixels.push(m);
            values.push(Complex64::new(0.0, 0.0));
        }
    }
    Ok(BpImage {
        image: ComplexGrid::new(side, values)?,
        degenerate_pixels,
    })
}
