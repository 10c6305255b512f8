//! Planar point processes inside a finite disc window.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Euclidean distance.
#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[inline]
pub fn distance_sq(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Disc of radius `radius` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    radius: f64,
}

impl SimWindow {
    pub const DEFAULT_RADIUS: f64 = 50.0;

    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("r_sim", format!("must be finite and > 0, got {radius}")));
        }
        Ok(SimWindow { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn contains(&self, p: Point) -> bool {
        p.norm_sq() <= self.radius * self.radius
    }

    /// The same disc grown by `margin`; used for partner nodes placed at a
    /// fixed separation from points that may sit on the boundary.
    pub fn grown(&self, margin: f64) -> SimWindow {
        SimWindow {
            radius: self.radius + margin.max(0.0),
        }
    }

    /// Uniform point in the disc.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        loop {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            let y = 2.0 * rng.random::<f64>() - 1.0;
            if x * x + y * y <= 1.0 {
                return Point::new(x * self.radius, y * self.radius);
            }
        }
    }
}

impl Default for SimWindow {
    fn default() -> Self {
        SimWindow {
            radius: Self::DEFAULT_RADIUS,
        }
    }
}

/// A finite realization of a point process. Point order is generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    pub points: Vec<Point>,
    pub window: SimWindow,
    /// Nominal density (points per unit area) of the generating process.
    pub density: f64,
}

impl PointPattern {
    pub fn empty(window: SimWindow, density: f64) -> Self {
        PointPattern {
            points: Vec::new(),
            window,
            density,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Homogeneous Poisson point process of the given density on the window.
pub fn sample_hppp<R: Rng + ?Sized>(
    density: f64,
    window: SimWindow,
    rng: &mut R,
) -> Result<PointPattern> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(invalid("density", format!("must be finite and >= 0, got {density}")));
    }
    let mean = density * window.area();
    if mean == 0.0 {
        return Ok(PointPattern::empty(window, density));
    }
    let count = Poisson::new(mean)
        .map_err(|e| invalid("density", e.to_string()))?
        .sample(rng) as usize;
    let points = (0..count).map(|_| window.sample_point(rng)).collect();
    Ok(PointPattern {
        points,
        window,
        density,
    })
}

/// A point at exactly `separation` from `origin` in a uniformly random direction.
pub fn place_partner<R: Rng + ?Sized>(origin: Point, separation: f64, rng: &mut R) -> Point {
    if separation == 0.0 {
        return origin;
    }
    let (ux, uy) = random_direction(rng);
    Point::new(origin.x + separation * ux, origin.y + separation * uy)
}

/// Unit vector with uniformly distributed angle (rejection from the unit disc).
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        let r2 = x * x + y * y;
        if r2 <= 1.0 && r2 > 1e-12 {
            let r = r2.sqrt();
            return (x / r, y / r);
        }
    }
}

/// Uniform-grid bucket index for fixed-radius neighbour queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialIndex {
    /// Builds an index whose cells are at least `cell` wide.
    pub fn new(points: &[Point], cell: f64) -> Self {
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
        // keep the table at most a few cells per point
        let max_cells_side = ((4 * points.len() + 16) as f64).sqrt().ceil();
        let mut cell = if cell.is_finite() && cell > 0.0 { cell } else { span };
        cell = cell.max(span / max_cells_side);
        let nx = ((max_x - min_x) / cell).floor() as usize + 1;
        let ny = ((max_y - min_y) / cell).floor() as usize + 1;

        let mut counts = vec![0u32; nx * ny + 1];
        let cell_of = |p: &Point| -> usize {
            let cx = (((p.x - min_x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - min_y) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        SpatialIndex {
            min_x,
            min_y,
            cell,
            nx,
            ny,
            starts: counts,
            items,
        }
    }

    /// Calls `f` with the index of every point that may lie within `radius`
    /// of `p` (a superset; callers check the exact distance).
    #[inline]
    pub fn for_each_candidate(&self, p: Point, radius: f64, mut f: impl FnMut(usize) -> bool) -> bool {
        if self.items.is_empty() {
            return true;
        }
        let lo_x = ((p.x - radius - self.min_x) / self.cell).floor().max(0.0);
        let lo_y = ((p.y - radius - self.min_y) / self.cell).floor().max(0.0);
        let hi_x = ((p.x + radius - self.min_x) / self.cell).floor();
        let hi_y = ((p.y + radius - self.min_y) / self.cell).floor();
        if hi_x < 0.0 || hi_y < 0.0 {
            return true;
        }
        let (lo_x, lo_y) = (lo_x as usize, lo_y as usize);
        let hi_x = (hi_x as usize).min(self.nx - 1);
        let hi_y = (hi_y as usize).min(self.ny - 1);
        if lo_x > hi_x {
            return true;
        }
        for cy in lo_y..=hi_y {
            let row = cy * self.nx;
            let a = self.starts[row + lo_x] as usize;
            let b = self.starts[row + hi_x + 1] as usize;
            for &i in &self.items[a..b] {
                if !f(i as usize) {
                    return false;
                }
            }
        }
        true
    }
}
