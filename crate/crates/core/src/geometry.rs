//! Grid and antenna layout.
//!
//! Cells are stored row-major. Row 0 is the top of the domain (largest y),
//! column 0 the left edge (smallest x), so a map renders upright.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::PhysicsConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

#[derive(Debug, Clone)]
pub struct Geometry {
    pub grid_n: usize,
    pub doi_side: f64,
    pub cell_side: f64,
    pub cell_centers: Vec<Point2>,
    pub tx_positions: Vec<Point2>,
    pub rx_positions: Vec<Point2>,
}

fn ring(count: usize, radius: f64) -> Vec<Point2> {
    (0..count)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / count as f64;
            Point2::new(radius * phi.cos(), radius * phi.sin())
        })
        .collect()
}

pub fn build_geometry(cfg: &PhysicsConfig) -> Result<Geometry> {
    cfg.validate()?;
    let n = cfg.grid_n;
    let h = cfg.cell_side();
    let half = cfg.doi_side / 2.0;
    let mut cell_centers = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cell_centers.push(Point2::new(
                -half + (j as f64 + 0.5) * h,
                half - (i as f64 + 0.5) * h,
            ));
        }
    }
    Ok(Geometry {
        grid_n: n,
        doi_side: cfg.doi_side,
        cell_side: h,
        cell_centers,
        tx_positions: ring(cfg.n_tx, cfg.array_radius),
        rx_positions: ring(cfg.n_rx, cfg.array_radius),
    })
}

impl Geometry {
    pub fn cell_count(&self) -> usize {
        self.cell_centers.len()
    }

    /// Row and column of the cell containing `p`, if `p` lies in the DOI.
    pub fn cell_at(&self, p: Point2) -> Option<(usize, usize)> {
        let half = self.doi_side / 2.0;
        let col = ((p.x + half) / self.cell_side).floor();
        let row = ((half - p.y) / self.cell_side).floor();
        let n = self.grid_n as f64;
        if (0.0..n).contains(&col) && (0.0..n).contains(&row) {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        let half = self.doi_side / 2.0;
        p.x.abs() <= half && p.y.abs() <= half
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }
}
