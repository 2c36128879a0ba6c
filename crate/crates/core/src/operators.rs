//! Discretized Green operators for pulse basis / point matching.
//!
//! With e^{+jωt} the outgoing solution of `(∇² + k²)·g = −δ` is
//! `g = −(j/4)·H0⁽²⁾(k|r − r′|)`, and the scattered field is
//! `k²∫ g·χ·E_tot`. Each square cell is replaced by the circle of equal area
//! (radius `a = h/√π`), which gives closed forms for the cell integral of
//! `k²·g`:
//!
//! * observation point outside the cell: `−(j/2)·π·k·a·J1(k·a)·H0⁽²⁾(k·ρ)`
//! * observation point at its own center: `−(j/2)·[π·k·a·H1⁽²⁾(k·a) − 2j]`

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::config::PhysicsConfig;
use crate::error::Result;
use crate::geometry::Geometry;
use crate::special::{bessel_j, hankel2};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Dense domain-to-domain and domain-to-receiver operators.
///
/// Both already include the `k²` factor, so the state equation reads
/// `E_tot = E_inc + G_D·(χ ⊙ E_tot)` and the data equation
/// `E_sca = G_S·(χ ⊙ E_tot)`.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub g_domain: Mat<Complex64>,
    pub g_surface: Mat<Complex64>,
    pub wavenumber: f64,
    pub equivalent_radius: f64,
}

impl OperatorPair {
    pub fn cell_count(&self) -> usize {
        self.g_domain.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.g_surface.nrows()
    }
}

pub fn equivalent_radius(cell_side: f64) -> f64 {
    cell_side / PI.sqrt()
}

/// Field at distance `rho` radiated by a unit-contrast cell of equivalent radius `a`.
pub fn cell_kernel(k: f64, a: f64, rho: f64) -> Complex64 {
    -0.5 * J * (PI * k * a * bessel_j(1, k * a)) * hankel2(0, k * rho)
}

/// Field at the center of a unit-contrast cell radiated by the cell itself.
pub fn self_kernel(k: f64, a: f64) -> Complex64 {
    -0.5 * J * (PI * k * a * hankel2(1, k * a) - 2.0 * J)
}

pub fn assemble_operators(geom: &Geometry, cfg: &PhysicsConfig) -> Result<OperatorPair> {
    cfg.validate()?;
    let n = geom.grid_n;
    let k = cfg.k_background();
    let h = geom.cell_side;
    let a = equivalent_radius(h);

    // On a uniform grid the kernel depends only on the row/column offset.
    let mut table = vec![Complex64::new(0.0, 0.0); n * n];
    for di in 0..n {
        for dj in 0..n {
            table[di * n + dj] = if di == 0 && dj == 0 {
                self_kernel(k, a)
            } else {
                let rho = h * ((di * di + dj * dj) as f64).sqrt();
                cell_kernel(k, a, rho)
            };
        }
    }

    let cells = n * n;
    let g_domain = Mat::from_fn(cells, cells, |m, l| {
        let (im, jm) = (m / n, m % n);
        let (il, jl) = (l / n, l % n);
        table[im.abs_diff(il) * n + jm.abs_diff(jl)]
    });

    let g_surface = Mat::from_fn(geom.rx_positions.len(), cells, |q, l| {
        cell_kernel(k, a, geom.rx_positions[q].distance(&geom.cell_centers[l]))
    });

    Ok(OperatorPair {
        g_domain,
        g_surface,
        wavenumber: k,
        equivalent_radius: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;

    fn small() -> (Geometry, PhysicsConfig, OperatorPair) {
        let cfg = PhysicsConfig::default().with_grid(12);
        let geom = build_geometry(&cfg).unwrap();
        let ops = assemble_operators(&geom, &cfg).unwrap();
        (geom, cfg, ops)
    }

    #[test]
    fn domain_operator_symmetric_and_finite() {
        let (_, _, ops) = small();
        let g = &ops.g_domain;
        for m in 0..g.nrows() {
            for l in 0..g.ncols() {
                let (a, b) = (g[(m, l)], g[(l, m)]);
                assert!(a.re.is_finite() && a.im.is_finite());
                assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn diagonal_is_self_term() {
        let (geom, cfg, ops) = small();
        let expected = self_kernel(cfg.k0(), equivalent_radius(geom.cell_side));
        for m in 0..ops.cell_count() {
            assert_eq!(ops.g_domain[(m, m)], expected);
        }
    }

    #[test]
    fn off_diagonal_depends_on_distance_only() {
        let (geom, cfg, ops) = small();
        let a = equivalent_radius(geom.cell_side);
        for &(m, l) in &[(0usize, 1usize), (5, 77), (143, 0), (30, 31)] {
            let rho = geom.cell_centers[m].distance(&geom.cell_centers[l]);
            let direct = cell_kernel(cfg.k0(), a, rho);
            assert!((ops.g_domain[(m, l)] - direct).norm() < 1e-14 * direct.norm());
        }
    }

    #[test]
    fn equidistant_cells_give_equal_surface_entries() {
        // Cells mirrored about the x axis sit at equal distance from the
        // receiver on the positive x axis.
        let (geom, _, ops) = small();
        let n = geom.grid_n;
        for i in 0..n / 2 {
            for j in 0..n {
                let a = ops.g_surface[(0, i * n + j)];
                let b = ops.g_surface[(0, (n - 1 - i) * n + j)];
                assert!((a - b).norm() < 1e-13 * a.norm());
            }
        }
    }
}
