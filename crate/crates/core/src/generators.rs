//! Scatterer profile generators.
//!
//! Every generator is a pure function of its arguments and seed. Where
//! shapes overlap, the one drawn last wins.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point2};
use crate::grid::{ContrastMap, RealGrid};
use crate::idx::IdxImages;

pub const GLYPH_SIDE: usize = 28;

/// Half-open permittivity interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for EpsRange {
    fn default() -> Self {
        EpsRange { lo: 1.0, hi: 5.0 }
    }
}

impl EpsRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "permittivity range ({lo}, {hi}] must satisfy 1 ≤ lo < hi"
            )));
        }
        Ok(EpsRange { lo, hi })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        self.hi - (self.hi - self.lo) * u
    }

    pub fn contains(&self, eps: f64) -> bool {
        eps > self.lo && eps <= self.hi
    }
}

/// A 28×28 grayscale glyph with intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Glyph {
    pub pixels: Vec<f64>,
}

pub trait GlyphSource: Send + Sync {
    fn len(&self) -> usize;

    fn glyph(&self, index: usize) -> Glyph;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn name(&self) -> &str;
}

impl GlyphSource for IdxImages {
    fn len(&self) -> usize {
        IdxImages::len(self)
    }

    fn glyph(&self, index: usize) -> Glyph {
        Glyph {
            pixels: self.image(index).iter().map(|&b| b as f64 / 255.0).collect(),
        }
    }

    fn name(&self) -> &str {
        "mnist-idx"
    }
}

/// Procedural handwritten-style digits: a stroke skeleton per digit class,
/// jittered in scale, position, slant and stroke width from the glyph index.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticDigits {
    pub count: usize,
}

impl Default for SyntheticDigits {
    fn default() -> Self {
        SyntheticDigits { count: 60_000 }
    }
}

type Stroke = Vec<(f64, f64)>;

fn loop_stroke(cx: f64, cy: f64, rx: f64, ry: f64) -> Stroke {
    (0..=24)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 24.0;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

// Unit box, y pointing down.
fn skeleton(digit: usize) -> Vec<Stroke> {
    match digit {
        0 => vec![loop_stroke(0.5, 0.5, 0.36, 0.48)],
        1 => vec![vec![(0.3, 0.22), (0.55, 0.0), (0.55, 1.0)]],
        2 => vec![vec![
            (0.1, 0.25),
            (0.3, 0.02),
            (0.7, 0.02),
            (0.9, 0.25),
            (0.85, 0.45),
            (0.1, 1.0),
            (0.95, 1.0),
        ]],
        3 => vec![vec![
            (0.1, 0.05),
            (0.85, 0.05),
            (0.45, 0.45),
            (0.85, 0.6),
            (0.88, 0.85),
            (0.6, 1.0),
            (0.1, 0.95),
        ]],
        4 => vec![vec![(0.7, 1.0), (0.7, 0.0), (0.05, 0.7), (0.95, 0.7)]],
        5 => vec![vec![
            (0.9, 0.0),
            (0.15, 0.0),
            (0.1, 0.45),
            (0.6, 0.4),
            (0.9, 0.65),
            (0.75, 0.95),
            (0.1, 0.95),
        ]],
        6 => vec![vec![
            (0.8, 0.0),
            (0.3, 0.3),
            (0.12, 0.7),
            (0.3, 1.0),
            (0.75, 0.95),
            (0.85, 0.7),
            (0.6, 0.5),
            (0.15, 0.65),
        ]],
        7 => vec![vec![(0.05, 0.0), (0.95, 0.0), (0.4, 1.0)]],
        8 => vec![loop_stroke(0.5, 0.25, 0.3, 0.25), loop_stroke(0.5, 0.74, 0.36, 0.26)],
        _ => vec![loop_stroke(0.5, 0.3, 0.34, 0.3), vec![(0.84, 0.3), (0.7, 1.0)]],
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

impl SyntheticDigits {
    pub fn digit_of(&self, index: usize) -> usize {
        index % 10
    }
}

impl GlyphSource for SyntheticDigits {
    fn len(&self) -> usize {
        self.count
    }

    fn glyph(&self, index: usize) -> Glyph {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d161 ^ index as u64);
        let height = rng.random_range(16.0..21.0);
        let width = height * rng.random_range(0.55..0.85);
        let slant = rng.random_range(-0.25..0.25);
        let half_width = rng.random_range(1.0..1.8);
        let x0 = 14.0 - width / 2.0 + rng.random_range(-1.5..1.5);
        let y0 = 14.0 - height / 2.0 + rng.random_range(-1.5..1.5);
        let strokes: Vec<Stroke> = skeleton(self.digit_of(index))
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|(u, v)| (x0 + u * width + slant * (0.5 - v) * height, y0 + v * height))
                    .collect()
            })
            .collect();
        let pixels = (0..GLYPH_SIDE * GLYPH_SIDE)
            .map(|k| {
                let p = ((k % GLYPH_SIDE) as f64 + 0.5, (k / GLYPH_SIDE) as f64 + 0.5);
                let d = strokes
                    .iter()
                    .flat_map(|s| s.windows(2).map(|w| segment_distance(p, w[0], w[1])))
                    .fold(f64::INFINITY, f64::min);
                (half_width - d + 0.5).clamp(0.0, 1.0)
            })
            .collect();
        Glyph { pixels }
    }

    fn name(&self) -> &str {
        "synthetic-digits"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitProfile {
    pub map: ContrastMap,
    pub eps_r: f64,
    pub glyph_index: usize,
}

/// Binarize a glyph at half its peak intensity and upsample it to the grid
/// by nearest neighbour. All-dark glyphs give an empty mask.
pub fn glyph_mask(glyph: &Glyph, grid_n: usize) -> Vec<bool> {
    let peak = glyph.pixels.iter().copied().fold(0.0, f64::max);
    let mut mask = vec![false; grid_n * grid_n];
    if peak <= 0.0 {
        return mask;
    }
    for i in 0..grid_n {
        let si = i * GLYPH_SIDE / grid_n;
        for j in 0..grid_n {
            let sj = j * GLYPH_SIDE / grid_n;
            mask[i * grid_n + j] = glyph.pixels[si * GLYPH_SIDE + sj] >= 0.5 * peak;
        }
    }
    mask
}

/// Homogeneous digit-shaped scatterer with one εr drawn from `eps`.
pub fn gen_digit(
    source: &dyn GlyphSource,
    eps: EpsRange,
    grid_n: usize,
    seed: u64,
) -> Result<DigitProfile> {
    if source.is_empty() {
        return Err(Error::BadIdxFile("glyph source is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let glyph_index = rng.random_range(0..source.len());
    let glyph = source.glyph(glyph_index);
    if glyph.pixels.len() != GLYPH_SIDE * GLYPH_SIDE {
        return Err(Error::BadIdxFile(format!(
            "glyphs must be {GLYPH_SIDE}x{GLYPH_SIDE}, got {} pixels",
            glyph.pixels.len()
        )));
    }
    let eps_r = eps.sample(&mut rng);
    Ok(DigitProfile {
        map: digit_from_glyph(&glyph, eps_r, grid_n)?,
        eps_r,
        glyph_index,
    })
}

pub fn digit_from_glyph(glyph: &Glyph, eps_r: f64, grid_n: usize) -> Result<ContrastMap> {
    let chi = eps_r - 1.0;
    let values = glyph_mask(glyph, grid_n)
        .into_iter()
        .map(|inside| if inside { chi } else { 0.0 })
        .collect();
    ContrastMap::from_values(grid_n, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub center: Point2,
    pub circumradius: f64,
    pub sides: usize,
    pub rotation: f64,
    pub eps_r: f64,
}

impl PolygonSpec {
    /// Vertices in counter-clockwise order.
    pub fn vertices(&self) -> Vec<Point2> {
        (0..self.sides)
            .map(|k| {
                let t = self.rotation + 2.0 * PI * k as f64 / self.sides as f64;
                Point2::new(
                    self.center.x + self.circumradius * t.cos(),
                    self.center.y + self.circumradius * t.sin(),
                )
            })
            .collect()
    }

    pub fn contains(&self, p: Point2) -> bool {
        let v = self.vertices();
        (0..v.len()).all(|k| {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub center: Point2,
    pub radius: f64,
    pub eps_r: f64,
}

impl CircleSpec {
    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance(&p) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub center: Point2,
    pub inner: f64,
    pub outer: f64,
    pub eps_r: f64,
}

impl AnnulusSpec {
    pub fn contains(&self, p: Point2) -> bool {
        let d = self.center.distance(&p);
        d >= self.inner && d <= self.outer
    }
}

fn check_eps(eps_r: f64) -> Result<()> {
    if !(eps_r.is_finite() && eps_r >= 1.0) {
        return Err(Error::InvalidConfig(format!("relative permittivity {eps_r} must be ≥ 1")));
    }
    Ok(())
}

fn paint(values: &mut [f64], geom: &Geometry, eps_r: f64, inside: impl Fn(Point2) -> bool) -> usize {
    let mut hits = 0;
    for (v, c) in values.iter_mut().zip(&geom.cell_centers) {
        if inside(*c) {
            *v = eps_r - 1.0;
            hits += 1;
        }
    }
    hits
}

/// Rasterize polygons in order by cell-center membership. A polygon whose
/// center lies in the DOI but covers no cell center still marks the cell
/// under its center.
pub fn rasterize_polygons(specs: &[PolygonSpec], geom: &Geometry) -> Result<ContrastMap> {
    let mut values = vec![0.0; geom.cell_count()];
    for s in specs {
        check_eps(s.eps_r)?;
        if paint(&mut values, geom, s.eps_r, |p| s.contains(p)) == 0 {
            if let Some((i, j)) = geom.cell_at(s.center) {
                values[i * geom.grid_n + j] = s.eps_r - 1.0;
            }
        }
    }
    ContrastMap::from_values(geom.grid_n, values)
}

pub fn random_polygons(geom: &Geometry, cfg: &PhysicsConfig, eps: EpsRange, seed: u64) -> Vec<PolygonSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = geom.doi_side / 2.0;
    let lambda = cfg.wavelength;
    let count = rng.random_range(1..=3);
    (0..count)
        .map(|_| PolygonSpec {
            sides: rng.random_range(3..=7),
            circumradius: rng.random_range(0.1 * lambda..=1.6 * lambda),
            center: Point2::new(rng.random_range(-half..=half), rng.random_range(-half..=half)),
            rotation: rng.random_range(0.0..2.0 * PI),
            eps_r: eps.sample(&mut rng),
        })
        .collect()
}

/// One to three random regular polygons, each with its own εr ∈ (1, 5].
pub fn gen_polygon(geom: &Geometry, cfg: &PhysicsConfig, seed: u64) -> Result<(ContrastMap, Vec<PolygonSpec>)> {
    let specs = random_polygons(geom, cfg, EpsRange::default(), seed);
    Ok((rasterize_polygons(&specs, geom)?, specs))
}

pub fn gen_overlap_circles(specs: &[CircleSpec], geom: &Geometry) -> Result<ContrastMap> {
    let mut values = vec![0.0; geom.cell_count()];
    for s in specs {
        check_eps(s.eps_r)?;
        paint(&mut values, geom, s.eps_r, |p| s.contains(p));
    }
    ContrastMap::from_values(geom.grid_n, values)
}

/// Two or three mutually overlapping circles with distinct permittivities.
pub fn random_overlap_circles(geom: &Geometry, cfg: &PhysicsConfig, eps: EpsRange, seed: u64) -> Vec<CircleSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = cfg.wavelength;
    let reach = geom.doi_side / 2.0 - 1.0 * lambda;
    let count = rng.random_range(2..=3);
    let anchor = Point2::new(rng.random_range(-reach..=reach), rng.random_range(-reach..=reach));
    (0..count)
        .map(|k| {
            let radius = rng.random_range(0.4 * lambda..=0.9 * lambda);
            let center = if k == 0 {
                anchor
            } else {
                let t: f64 = rng.random_range(0.0..2.0 * PI);
                let d = rng.random_range(0.2 * lambda..=0.6 * lambda);
                Point2::new(anchor.x + d * t.cos(), anchor.y + d * t.sin())
            };
            CircleSpec {
                center,
                radius,
                eps_r: eps.sample(&mut rng),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AustriaProfile {
    pub circles: [CircleSpec; 2],
    pub annulus: AnnulusSpec,
}

impl AustriaProfile {
    /// Disks of radius 0.56λ at (±0.7λ, 1.4λ); annulus 0.7λ–1.4λ at (0, −0.7λ).
    pub fn new(eps_circles: (f64, f64), eps_annulus: f64, wavelength: f64) -> Self {
        let l = wavelength;
        AustriaProfile {
            circles: [
                CircleSpec {
                    center: Point2::new(-0.7 * l, 1.4 * l),
                    radius: 0.56 * l,
                    eps_r: eps_circles.0,
                },
                CircleSpec {
                    center: Point2::new(0.7 * l, 1.4 * l),
                    radius: 0.56 * l,
                    eps_r: eps_circles.1,
                },
            ],
            annulus: AnnulusSpec {
                center: Point2::new(0.0, -0.7 * l),
                inner: 0.7 * l,
                outer: 1.4 * l,
                eps_r: eps_annulus,
            },
        }
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let [a, b] = self.circles;
        if a.center.distance(&b.center) <= a.radius + b.radius {
            return Err(Error::OverlapViolation("the two disks intersect".into()));
        }
        for c in [a, b] {
            if c.center.distance(&self.annulus.center) <= c.radius + self.annulus.outer {
                return Err(Error::OverlapViolation("a disk intersects the annulus".into()));
            }
        }
        Ok(())
    }
}

pub fn gen_austria(
    eps_circles: (f64, f64),
    eps_annulus: f64,
    geom: &Geometry,
    cfg: &PhysicsConfig,
) -> Result<ContrastMap> {
    let profile = AustriaProfile::new(eps_circles, eps_annulus, cfg.wavelength);
    profile.check_disjoint()?;
    let mut values = vec![0.0; geom.cell_count()];
    for c in profile.circles {
        check_eps(c.eps_r)?;
        paint(&mut values, geom, c.eps_r, |p| c.contains(p));
    }
    let ring = profile.annulus;
    check_eps(ring.eps_r)?;
    paint(&mut values, geom, ring.eps_r, |p| ring.contains(p));
    ContrastMap::from_values(geom.grid_n, values)
}

/// Count 4-connected components of the non-zero cells.
pub fn connected_components(map: &RealGrid) -> usize {
    let n = map.side();
    let mut seen = vec![false; n * n];
    let mut count = 0;
    for start in 0..n * n {
        if seen[start] || map.values()[start] == 0.0 {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(m) = stack.pop() {
            let (i, j) = (m / n, m % n);
            let mut visit = |k: usize| {
                if !seen[k] && map.values()[k] != 0.0 {
                    seen[k] = true;
                    stack.push(k);
                }
            };
            if i > 0 {
                visit(m - n);
            }
            if i + 1 < n {
                visit(m + n);
            }
            if j > 0 {
                visit(m - 1);
            }
            if j + 1 < n {
                visit(m + 1);
            }
        }
    }
    count
}
