//! Eigenfunction-series solution for a centered homogeneous dielectric
//! cylinder illuminated by a line source (TM, e^{+jωt}).
//!
//! With the source at (ρ′, φ′) and the receiver at (ρ, φ), both outside the
//! cylinder of radius `a`,
//!
//! ```text
//! E_sca = (j/4) Σ_n c_n H_n⁽²⁾(k0 ρ′) H_n⁽²⁾(k0 ρ) e^{jn(φ−φ′)}
//! c_n   = [k1 J_n′(k1a) J_n(k0a) − k0 J_n(k1a) J_n′(k0a)]
//!       / [k0 J_n(k1a) H_n⁽²⁾′(k0a) − k1 J_n′(k1a) H_n⁽²⁾(k0a)]
//! ```
//!
//! from continuity of E_z and ∂E_z/∂ρ at ρ = a.

use num_complex::Complex64;

use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::forward::ScatterMatrix;
use crate::geometry::Geometry;
use crate::special::{bessel_j, bessel_j_prime, hankel2, hankel2_prime};

pub const MAX_ORDER: usize = 400;
const RELATIVE_CUTOFF: f64 = 1e-12;

/// Scattering coefficient of order `n` (`c_{−n} = c_n`).
pub fn scattering_coefficient(n: i32, k0: f64, k1: f64, radius: f64) -> Complex64 {
    let (x0, x1) = (k0 * radius, k1 * radius);
    let num = k1 * bessel_j_prime(n, x1) * bessel_j(n, x0) - k0 * bessel_j(n, x1) * bessel_j_prime(n, x0);
    let den = k0 * bessel_j(n, x1) * hankel2_prime(n, x0) - k1 * bessel_j_prime(n, x1) * hankel2(n, x0);
    Complex64::new(num, 0.0) / den
}

pub fn mie_reference(
    radius: f64,
    eps_r: f64,
    geom: &Geometry,
    cfg: &PhysicsConfig,
) -> Result<ScatterMatrix> {
    cfg.validate()?;
    if !(radius > 0.0 && radius < geom.doi_side / 2.0) {
        return Err(Error::InvalidConfig(format!(
            "cylinder radius {radius} must lie in (0, doi_side/2)"
        )));
    }
    if !(eps_r.is_finite() && eps_r >= 1.0) {
        return Err(Error::InvalidConfig(format!("eps_r {eps_r} must be ≥ 1")));
    }
    let n_tx = geom.tx_positions.len();
    let n_rx = geom.rx_positions.len();
    let mut out = ScatterMatrix::zeros(n_rx, n_tx);
    if eps_r == 1.0 {
        return Ok(out);
    }

    let k0 = cfg.k_background();
    let k1 = k0 * eps_r.sqrt();
    let x1 = k1 * radius;

    // Radial products are evaluated once per order; every antenna sits on
    // the same circle but the series is kept general in ρ and ρ′.
    let mut terms: Vec<(Complex64, f64, f64)> = Vec::new();
    let mut converged = false;
    for n in 0..=MAX_ORDER as i32 {
        let c = scattering_coefficient(n, k0, k1, radius);
        terms.push((c, n as f64, if n == 0 { 1.0 } else { 2.0 }));
        if n as f64 > x1 + 4.0 && series_settled(&terms, geom, k0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { order: MAX_ORDER });
    }

    let j4 = Complex64::new(0.0, 0.25);
    for (p, tx) in geom.tx_positions.iter().enumerate() {
        let (rho_t, phi_t) = (tx.norm(), tx.angle());
        let h_tx: Vec<Complex64> = (0..terms.len()).map(|n| hankel2(n as i32, k0 * rho_t)).collect();
        for (q, rx) in geom.rx_positions.iter().enumerate() {
            let (rho_r, phi_r) = (rx.norm(), rx.angle());
            let mut sum = Complex64::new(0.0, 0.0);
            for (n, &(c, nf, weight)) in terms.iter().enumerate() {
                let h_rx = hankel2(n as i32, k0 * rho_r);
                sum += weight * c * h_tx[n] * h_rx * (nf * (phi_r - phi_t)).cos();
            }
            out.values[(q, p)] = j4 * sum;
        }
    }
    Ok(out)
}

// The last term must be negligible against the partial sum at the widest
// antenna pair, and the coefficient itself must be decaying.
fn series_settled(terms: &[(Complex64, f64, f64)], geom: &Geometry, k0: f64) -> bool {
    let rho = geom
        .tx_positions
        .iter()
        .chain(geom.rx_positions.iter())
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    let last = terms.len() - 1;
    let radial = |n: usize| {
        let h = hankel2(n as i32, k0 * rho);
        (h * h).norm()
    };
    let partial: f64 = terms
        .iter()
        .enumerate()
        .map(|(n, (c, _, w))| w * c.norm() * radial(n))
        .sum();
    let tail = terms[last].2 * terms[last].0.norm() * radial(last);
    let decaying = last == 0 || terms[last].0.norm() <= terms[last - 1].0.norm();
    partial > 0.0 && decaying && tail <= RELATIVE_CUTOFF * partial
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;

    fn setup() -> (Geometry, PhysicsConfig) {
        let cfg = PhysicsConfig::default().with_grid(8);
        (build_geometry(&cfg).unwrap(), cfg)
    }

    #[test]
    fn unit_permittivity_gives_zero_field() {
        let (geom, cfg) = setup();
        let s = mie_reference(0.5 * cfg.wavelength, 1.0, &geom, &cfg).unwrap();
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn vanishing_radius_vanishes() {
        let (geom, cfg) = setup();
        let norms: Vec<f64> = [0.02, 0.002, 0.0002]
            .iter()
            .map(|r| mie_reference(r * cfg.wavelength, 2.0, &geom, &cfg).unwrap().norm())
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
        // Small cylinders radiate in proportion to their area.
        let ratio = norms[2] / norms[1];
        assert!((ratio - 1e-2).abs() < 5e-5, "{ratio}");
    }

    #[test]
    fn coefficients_decay_beyond_size_parameter() {
        let cfg = PhysicsConfig::default();
        let (k0, a) = (cfg.k0(), 0.5 * cfg.wavelength);
        let c = |n| scattering_coefficient(n, k0, k0 * 3f64.sqrt(), a);
        assert!(c(20).norm() < 1e-12 * c(0).norm());
        assert_eq!(c(-3), c(3));
    }

    #[test]
    fn collocated_arrays_are_reciprocal() {
        let (geom, cfg) = setup();
        let s = mie_reference(0.5 * cfg.wavelength, 3.0, &geom, &cfg).unwrap();
        assert!(s.sub(&s.transpose()).norm() < 1e-12 * s.norm());
    }

    #[test]
    fn rejects_oversized_cylinder() {
        let (geom, cfg) = setup();
        assert!(mie_reference(geom.doi_side, 2.0, &geom, &cfg).is_err());
    }
}
