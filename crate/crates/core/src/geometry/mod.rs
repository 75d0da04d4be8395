//! Planar post-processing of range clouds.
//!
//! Everything decided on an occupancy grid is a resolution-dependent
//! diagnostic of a sampled set, not a statement about the exact set.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::range::RangeCloud;
use crate::rng::rng_from_seed;

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Counterclockwise hull vertices starting at the lexicographically smallest
/// point; collinear points are dropped.
pub fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut p: Vec<C64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut lower: Vec<C64> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area of a simple polygon (positive for counterclockwise order).
pub fn polygon_area(poly: &[C64]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
        / 2.0
}

/// Whether `z` lies in the counterclockwise convex polygon `hull`, with slack `tol`.
pub fn in_convex_polygon(hull: &[C64], z: C64, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (z - hull[0]).norm() <= tol,
        2 => segment_distance(z, hull[0], hull[1]) <= tol,
        n => (0..n).all(|k| {
            let (a, b) = (hull[k], hull[(k + 1) % n]);
            cross(a, b, z) >= -tol * (b - a).norm()
        }),
    }
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Winding number of the closed polyline `path` (the last vertex joins the first) around `z0`.
pub fn winding_number(path: &[C64], z0: C64) -> Result<i64> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let n = path.len();
    let mut total = 0.0;
    for k in 0..n {
        let (a, b) = (path[k], path[(k + 1) % n]);
        if segment_distance(z0, a, b) <= 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "point {z0} lies on the path"
            )));
        }
        total += ((b - z0) / (a - z0)).arg();
    }
    Ok((total / TAU).round() as i64)
}

pub fn diameter(points: &[C64]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

fn bounding_box(points: &[C64]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    (lo, hi)
}

/// Largest distance from a point of `from` to the set `to`.
pub fn directed_hausdorff(from: &[C64], to: &[C64]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    let tree = RTree::bulk_load(to.iter().map(|z| [z.re, z.im]).collect());
    from.iter()
        .map(|z| {
            let q = [z.re, z.im];
            tree.nearest_neighbor(q).map_or(f64::INFINITY, |p| (z - C64::new(p[0], p[1])).norm())
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Boolean `m x m` occupancy of a point set over its bounding box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub resolution: usize,
    pub lo: C64,
    pub hi: C64,
    /// Row-major by real-part index: `cells[i * m + j]` covers column `i` (real) and row `j` (imaginary).
    pub cells: Vec<bool>,
    pub min_modulus: f64,
    pub max_modulus: f64,
}

impl OccupancyGrid {
    pub fn new(points: &[C64], resolution: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point set".into()));
        }
        let (lo, hi) = bounding_box(points);
        Self::with_bounds(points, resolution, lo, hi)
    }

    /// Grid over the rectangle `[lo, hi]`, which must contain every point.
    pub fn with_bounds(points: &[C64], resolution: usize, lo: C64, hi: C64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point set".into()));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let (plo, phi) = bounding_box(points);
        if plo.re < lo.re || plo.im < lo.im || phi.re > hi.re || phi.im > hi.im {
            return Err(Error::InvalidArgument("grid bounds do not contain all points".into()));
        }
        // a degenerate direction gets a tiny positive width so cells stay well defined
        let pad = |a: f64, b: f64| if b > a { b } else { a + 1e-9f64.max(a.abs() * 1e-12) };
        let hi = C64::new(pad(lo.re, hi.re), pad(lo.im, hi.im));
        let mut g = Self {
            resolution,
            lo,
            hi,
            cells: vec![false; resolution * resolution],
            min_modulus: points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
            max_modulus: points.iter().map(|z| z.norm()).fold(0.0, f64::max),
        };
        for &z in points {
            let (i, j) = g.cell_of_clamped(z);
            g.cells[i * resolution + j] = true;
        }
        Ok(g)
    }

    pub fn cell_width(&self) -> (f64, f64) {
        let m = self.resolution as f64;
        ((self.hi.re - self.lo.re) / m, (self.hi.im - self.lo.im) / m)
    }

    fn cell_of_clamped(&self, z: C64) -> (usize, usize) {
        let (w, h) = self.cell_width();
        let m = self.resolution;
        let f = |v: f64, o: f64, s: f64| (((v - o) / s).floor().max(0.0) as usize).min(m - 1);
        (f(z.re, self.lo.re, w), f(z.im, self.lo.im, h))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.lo.re && z.re <= self.hi.re && z.im >= self.lo.im && z.im <= self.hi.im
    }

    /// Cell containing `z`, if `z` is inside the bounds.
    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        self.contains(z).then(|| self.cell_of_clamped(z))
    }

    pub fn center(&self, i: usize, j: usize) -> C64 {
        let (w, h) = self.cell_width();
        C64::new(
            self.lo.re + (i as f64 + 0.5) * w,
            self.lo.im + (j as f64 + 0.5) * h,
        )
    }

    pub fn occupied(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.resolution + j]
    }

    /// Occupied itself or through one of its eight neighbours.
    fn covered(&self, i: usize, j: usize) -> bool {
        let m = self.resolution as isize;
        let (i, j) = (i as isize, j as isize);
        (-1..=1).any(|di| {
            (-1..=1).any(|dj| {
                let (a, b) = (i + di, j + dj);
                a >= 0 && b >= 0 && a < m && b < m && self.cells[(a * m + b) as usize]
            })
        })
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn occupied_area(&self) -> f64 {
        let (w, h) = self.cell_width();
        self.occupied_count() as f64 * w * h
    }

    /// Fraction of cells whose center satisfies `region` that are occupied.
    pub fn region_occupancy(&self, region: impl Fn(C64) -> bool) -> f64 {
        let m = self.resolution;
        let (mut inside, mut hit) = (0usize, 0usize);
        for i in 0..m {
            for j in 0..m {
                if region(self.center(i, j)) {
                    inside += 1;
                    hit += self.occupied(i, j) as usize;
                }
            }
        }
        if inside == 0 {
            0.0
        } else {
            hit as f64 / inside as f64
        }
    }

    fn occupied_cells(&self) -> Vec<(usize, usize)> {
        let m = self.resolution;
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.occupied(i, j))
            .collect()
    }

    /// Whether every grid cell on the segment from the center of `(i, j)` to `to` is covered.
    fn visible(&self, (i, j): (usize, usize), to: C64) -> bool {
        let from = self.center(i, j);
        let (w, h) = self.cell_width();
        let steps = (((to.re - from.re).abs() / w).max((to.im - from.im).abs() / h) * 2.0).ceil() as usize;
        (0..=steps).all(|s| {
            let t = if steps == 0 { 0.0 } else { s as f64 / steps as f64 };
            let (a, b) = self.cell_of_clamped(from + (to - from) * t);
            self.covered(a, b)
        })
    }
}

/// Discrete visibility test: every occupied cell sees `center` through covered cells.
///
/// A cell counts as covered when it or one of its eight neighbours is occupied,
/// which absorbs the sampling gaps of a finite cloud along thin parts of a set.
pub fn star_shaped_test(grid: &OccupancyGrid, center: C64) -> Result<bool> {
    let Some((ci, cj)) = grid.cell_of(center) else {
        return Err(Error::InvalidArgument(format!(
            "center {center} is outside the grid bounds"
        )));
    };
    if !grid.covered(ci, cj) {
        return Ok(false);
    }
    Ok(grid.occupied_cells().into_iter().all(|c| grid.visible(c, center)))
}

/// Searches the occupied cell centers for one from which the grid is star-shaped.
///
/// Candidate cells are tried in a seeded random order and every candidate's
/// visibility checks are also shuffled, so failing centers are rejected early.
pub fn find_star_center(grid: &OccupancyGrid, seed: u64) -> Option<C64> {
    let mut rng = rng_from_seed(seed);
    let mut cands = grid.occupied_cells();
    cands.shuffle(&mut rng);
    let mut cells = cands.clone();
    cells.shuffle(&mut rng);
    cands.into_iter().map(|(i, j)| grid.center(i, j)).find(|&z| {
        cells.iter().all(|&c| grid.visible(c, z))
    })
}

/// Outcome of `disc_diagnostic`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscReport {
    pub rotation_invariant: bool,
    pub origin_gap: f64,
    pub annulus_suspected: bool,
    /// `origin_gap > 0.1 max|z|`, regardless of rotation invariance.
    pub origin_excluded: bool,
    pub max_modulus: f64,
    pub diameter: f64,
    /// Hausdorff distances between the cloud and its rotations by `2 pi / 7` and `1`.
    pub rotation_distances: [f64; 2],
    pub occupied_fraction: f64,
}

pub fn disc_diagnostic(cloud: &RangeCloud, grid_res: usize) -> Result<DiscReport> {
    disc_diagnostic_points(&cloud.points, grid_res)
}

pub fn disc_diagnostic_points(points: &[C64], grid_res: usize) -> Result<DiscReport> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty cloud".into()));
    }
    let grid = OccupancyGrid::new(points, grid_res)?;
    let diam = diameter(points);
    let mut dist = [0.0; 2];
    for (d, theta) in dist.iter_mut().zip([TAU / 7.0, 1.0]) {
        let w = C64::from_polar(1.0, theta);
        let rotated: Vec<C64> = points.iter().map(|z| z * w).collect();
        *d = hausdorff(points, &rotated);
    }
    let rotation_invariant = dist.iter().all(|&d| d <= 0.05 * diam);
    let origin_excluded = grid.min_modulus > 0.1 * grid.max_modulus;
    Ok(DiscReport {
        rotation_invariant,
        origin_gap: grid.min_modulus,
        annulus_suspected: rotation_invariant && origin_excluded,
        origin_excluded,
        max_modulus: grid.max_modulus,
        diameter: diam,
        rotation_distances: dist,
        occupied_fraction: grid.occupied_count() as f64 / (grid_res * grid_res) as f64,
    })
}

/// `{ l w : l in [r, s], w in W }` over `samples` equally spaced `l`.
pub fn scale_set(points: &[C64], r: f64, s: f64, samples: usize) -> Result<Vec<C64>> {
    if !(r >= 0.0 && r <= s) {
        return Err(Error::InvalidArgument(format!(
            "scale interval [{r}, {s}] must satisfy 0 <= r <= s"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let lambdas: Vec<f64> = if samples == 1 {
        vec![r]
    } else {
        (0..samples)
            .map(|k| r + (s - r) * k as f64 / (samples - 1) as f64)
            .collect()
    };
    Ok(lambdas
        .iter()
        .flat_map(|&l| points.iter().map(move |z| z * l))
        .collect())
}

/// Scatter plot of `points` with the hull drawn as a closed polyline, 800x800 viewport.
pub fn svg_scatter(points: &[C64], hull: &[C64]) -> String {
    const SIZE: f64 = 800.0;
    const MARGIN: f64 = 20.0;
    let (lo, hi) = if points.is_empty() {
        (C64::new(-1.0, -1.0), C64::new(1.0, 1.0))
    } else {
        bounding_box(points)
    };
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let mid = (lo + hi) * 0.5;
    let map = |z: C64| {
        (
            SIZE / 2.0 + (z.re - mid.re) * scale,
            SIZE / 2.0 - (z.im - mid.im) * scale,
        )
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="800" fill="white"/>"#);
    let _ = writeln!(s, r##"<g fill="#1f4e9a" fill-opacity="0.5">"##);
    for &z in points {
        let (x, y) = map(z);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5"/>"#);
    }
    let _ = writeln!(s, "</g>");
    if !hull.is_empty() {
        let pts: Vec<String> = hull
            .iter()
            .chain(std::iter::once(&hull[0]))
            .map(|&z| {
                let (x, y) = map(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1"/>"##,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: impl AsRef<Path>, points: &[C64], hull: &[C64]) -> Result<()> {
    std::fs::write(path, svg_scatter(points, hull))?;
    Ok(())
}
