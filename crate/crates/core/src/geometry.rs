//! Points, coordinate matrices and windowed statistics.

use core::ops::Range;

use crate::error::{Error, Result};

/// A 2D coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        libm::sqrt(self.dist_sq(other))
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

/// Ordered rows of a coordinate matrix. Projections keep the row count.
pub type CoordMatrix = alloc::vec::Vec<Point>;

/// Euclidean distance.
pub fn euclid(a: Point, b: Point) -> f64 {
    a.dist(&b)
}

/// Which rows feed the statistics of a transform.
///
/// Statistics windows are always explicit: the TSP projections compute
/// extremes over every row except the first while transforming all rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    All,
    ExcludeFirst,
}

impl Window {
    /// Row range for a matrix of `n` rows. A window that would be empty
    /// falls back to all rows.
    pub fn rows(self, n: usize) -> Range<usize> {
        match self {
            Window::ExcludeFirst if n > 1 => 1..n,
            _ => 0..n,
        }
    }
}

/// Componentwise min and max over `window`.
pub fn bbox(coords: &[Point], window: Range<usize>) -> Result<(Point, Point)> {
    if window.is_empty() || window.end > coords.len() {
        return Err(Error::EmptyWindow);
    }
    let mut lo = coords[window.start];
    let mut hi = lo;
    for p in &coords[window] {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    Ok((lo, hi))
}

/// Summary statistics of a window used by projections and DSL programs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub min: Point,
    pub max: Point,
    pub centroid: Point,
}

impl WindowStats {
    pub fn compute(coords: &[Point], window: Range<usize>) -> Result<Self> {
        let (min, max) = bbox(coords, window.clone())?;
        let count = window.len() as f64;
        let (sx, sy) = coords[window]
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Ok(Self {
            min,
            max,
            centroid: Point::new(sx / count, sy / count),
        })
    }

    /// Midpoint of the extremes per axis.
    pub fn mid(&self) -> Point {
        Point::new((self.max.x + self.min.x) / 2.0, (self.max.y + self.min.y) / 2.0)
    }

    /// Largest axis extent, or `None` when it is zero (degenerate window).
    pub fn max_range(&self) -> Option<f64> {
        let r = (self.max.x - self.min.x).max(self.max.y - self.min.y);
        (r > 0.0).then_some(r)
    }

    /// Largest axis extent with the zero guard applied.
    pub fn guarded_range(&self) -> f64 {
        self.max_range().unwrap_or(1.0)
    }
}
