//! Square image-like grids over the DOI.

use std::ops::Deref;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued `n × n` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    n: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for a {n}x{n} grid", n * n),
                found: values.len().to_string(),
            });
        }
        Ok(RealGrid { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        RealGrid {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn filled(n: usize, value: f64) -> Self {
        RealGrid {
            n,
            values: vec![value; n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        RealGrid { n, values }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealGrid {
        RealGrid {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub(crate) fn check_same_shape(&self, other: &RealGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0}", self.n),
                found: format!("{0}x{0}", other.n),
            });
        }
        Ok(())
    }
}

/// Contrast χ = εr − 1 over the DOI. Non-negative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap(RealGrid);

impl ContrastMap {
    pub fn new(grid: RealGrid) -> Result<Self> {
        if let Some((index, &value)) = grid
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidContrast { index, value });
        }
        Ok(ContrastMap(grid))
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(RealGrid::new(n, values)?)
    }

    pub fn zeros(n: usize) -> Self {
        ContrastMap(RealGrid::zeros(n))
    }

    /// Uniform contrast over the whole DOI.
    pub fn uniform(n: usize, chi: f64) -> Result<Self> {
        Self::new(RealGrid::filled(n, chi))
    }

    pub fn from_permittivity(n: usize, eps_r: Vec<f64>) -> Result<Self> {
        Self::from_values(n, eps_r.into_iter().map(|e| e - 1.0).collect())
    }

    /// Clamp an arbitrary real image to χ ≥ 0. Non-finite pixels become 0.
    pub fn clamped(grid: &RealGrid) -> Self {
        ContrastMap(grid.map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 }))
    }

    pub fn grid(&self) -> &RealGrid {
        &self.0
    }

    pub fn into_grid(self) -> RealGrid {
        self.0
    }

    /// Indices of cells with non-zero contrast.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.values.iter().all(|v| *v == 0.0)
    }
}

impl Deref for ContrastMap {
    type Target = RealGrid;

    fn deref(&self) -> &RealGrid {
        &self.0
    }
}

impl AsRef<RealGrid> for ContrastMap {
    fn as_ref(&self) -> &RealGrid {
        &self.0
    }
}

impl AsRef<RealGrid> for RealGrid {
    fn as_ref(&self) -> &RealGrid {
        self
    }
}

/// Complex-valued `n × n` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    n: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(n: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for a {n}x{n} grid", n * n),
                found: values.len().to_string(),
            });
        }
        Ok(ComplexGrid { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        ComplexGrid {
            n,
            values: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real(&self) -> RealGrid {
        RealGrid {
            n: self.n,
            values: self.values.iter().map(|c| c.re).collect(),
        }
    }

    pub fn imag(&self) -> RealGrid {
        RealGrid {
            n: self.n,
            values: self.values.iter().map(|c| c.im).collect(),
        }
    }

    pub fn magnitude(&self) -> RealGrid {
        RealGrid {
            n: self.n,
            values: self.values.iter().map(|c| c.norm()).collect(),
        }
    }
}
