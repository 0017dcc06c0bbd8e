//! Coordinate projections applied to a KNN subgraph before scoring.
//!
//! A subgraph is laid out as `[anchor | k candidates | last]`. For TSP the
//! anchor is the tour's first node, for CVRP it is the depot (the depot,
//! customer and last blocks of the CVRP layout). Every projection returns
//! a matrix with exactly the input's row count.
//!
//! TSP projections take their statistics over rows `1..` (all but the
//! anchor), transform every row and clip to the unit square. CVRP
//! projections work on offsets from the depot and do not clip.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dsl::DslProgram;
use crate::error::{Error, Result};
use crate::geometry::{Point, Window, WindowStats};
use crate::instance::ProblemKind;

/// Direction guard of the exponential depot projection.
pub const DIRECTION_EPS: f64 = 1e-6;
/// The guard exactly as printed in the original formula listing.
pub const DIRECTION_EPS_VERBATIM: f64 = 1e6;

/// Depot, customer and last-node blocks of a CVRP subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct CvrpBlocks {
    pub depot: Point,
    pub customers: Vec<Point>,
    pub last: Point,
}

impl CvrpBlocks {
    pub fn concat(&self) -> Vec<Point> {
        let mut v = Vec::with_capacity(self.customers.len() + 2);
        v.push(self.depot);
        v.extend_from_slice(&self.customers);
        v.push(self.last);
        v
    }

    /// Splits `[depot | customers | last]`; needs at least two rows.
    pub fn split(rows: &[Point]) -> Option<Self> {
        let (&depot, rest) = rows.split_first()?;
        let (&last, customers) = rest.split_last()?;
        Some(Self {
            depot,
            customers: customers.to_vec(),
            last,
        })
    }

    fn map(&self, f: impl Fn(&[Point]) -> Vec<Point>) -> Self {
        let out = f(&self.concat());
        Self::split(&out).expect("projection preserves row count")
    }
}

#[inline]
pub(crate) fn clip01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
fn clip_point(p: Point) -> Point {
    Point::new(clip01(p.x), clip01(p.y))
}

fn tsp_stats(coords: &[Point]) -> Option<WindowStats> {
    WindowStats::compute(coords, Window::ExcludeFirst.rows(coords.len())).ok()
}

/// Min-shift, max-range scale, clip. Where the window is degenerate the
/// minimum is added back before clipping.
pub fn project_seed_tsp(coords: &[Point]) -> Vec<Point> {
    let Some(st) = tsp_stats(coords) else {
        return Vec::new();
    };
    let degenerate = st.max_range().is_none();
    let r = st.guarded_range();
    coords
        .iter()
        .map(|s| {
            let mut x = (s.x - st.min.x) / r;
            let mut y = (s.y - st.min.y) / r;
            if degenerate {
                x += st.min.x;
                y += st.min.y;
            }
            Point::new(clip01(x), clip01(y))
        })
        .collect()
}

/// Mirror about the window maximum, scale by the max range, shift back by
/// the maximum, clip.
pub fn project_tsp1k(coords: &[Point]) -> Vec<Point> {
    let Some(st) = tsp_stats(coords) else {
        return Vec::new();
    };
    let m = st.max;
    let r = st.guarded_range();
    coords
        .iter()
        .map(|s| clip_point(Point::new((m.x - s.x) / r + m.x, (m.y - s.y) / r + m.y)))
        .collect()
}

/// Min-shift, elementwise tanh, scale by the original max range, clip.
pub fn project_tsp5k(coords: &[Point]) -> Vec<Point> {
    let Some(st) = tsp_stats(coords) else {
        return Vec::new();
    };
    let m = st.min;
    let r = st.guarded_range();
    coords
        .iter()
        .map(|s| {
            clip_point(Point::new(
                libm::tanh(s.x - m.x) / r,
                libm::tanh(s.y - m.y) / r,
            ))
        })
        .collect()
}

/// Centre on the midpoint of the extremes, scale by the max range, shift to
/// (0.5, 0.5), clip.
pub fn project_tsp10k(coords: &[Point]) -> Vec<Point> {
    let Some(st) = tsp_stats(coords) else {
        return Vec::new();
    };
    let m = st.mid();
    let r = st.guarded_range();
    coords
        .iter()
        .map(|s| clip_point(Point::new((s.x - m.x) / r + 0.5, (s.y - m.y) / r + 0.5)))
        .collect()
}

/// Seed normalisation for the CVRP layout: min-shift and max-range scale
/// over every row but the depot, then clip. No degenerate re-add.
pub fn project_seed_cvrp(coords: &[Point]) -> Vec<Point> {
    let Some(st) = tsp_stats(coords) else {
        return Vec::new();
    };
    let r = st.guarded_range();
    coords
        .iter()
        .map(|s| clip_point(Point::new((s.x - st.min.x) / r, (s.y - st.min.y) / r)))
        .collect()
}

fn depot_offsets(coords: &[Point]) -> (Point, Vec<Point>) {
    let s0 = coords.first().copied().unwrap_or_default();
    let v = coords
        .iter()
        .map(|s| Point::new(s.x - s0.x, s.y - s0.y))
        .collect();
    (s0, v)
}

/// Offsets from the depot rescaled so the farthest node sits at unit
/// distance.
pub fn project_cvrp1k(coords: &[Point]) -> Vec<Point> {
    let (s0, v) = depot_offsets(coords);
    let norms: Vec<f64> = v.iter().map(Point::norm).collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    v.iter()
        .zip(&norms)
        .map(|(vi, &n)| {
            let g = if n > 0.0 { n } else { 1.0 };
            let mag = g / max;
            Point::new(s0.x + vi.x / g * mag, s0.y + vi.y / g * mag)
        })
        .collect()
}

/// Offsets from the depot divided by the square root of the largest
/// depot distance.
pub fn project_cvrp5k(coords: &[Point]) -> Vec<Point> {
    let (s0, v) = depot_offsets(coords);
    let max = v.iter().map(Point::norm).fold(0.0, f64::max);
    let vmax = libm::sqrt(max);
    let vmax = if vmax > 0.0 { vmax } else { 1.0 };
    v.iter()
        .map(|vi| Point::new(s0.x + vi.x / vmax, s0.y + vi.y / vmax))
        .collect()
}

/// Depot offsets with magnitudes `e^|v| - 1`, normalised by their maximum,
/// along the guarded unit direction `v / (|v| + eps)`.
pub fn project_cvrp10k_with(coords: &[Point], eps: f64) -> Vec<Point> {
    let (s0, v) = depot_offsets(coords);
    let norms: Vec<f64> = v.iter().map(Point::norm).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let vmax = libm::expm1(top);
    let magnitude = |n: f64| -> f64 {
        if vmax.is_finite() {
            let vmax = if vmax > 0.0 { vmax } else { 1.0 };
            libm::expm1(n) / vmax
        } else {
            // (e^n - 1) / (e^top - 1) without overflow.
            libm::exp(n - top) * libm::expm1(-n) / libm::expm1(-top)
        }
    };
    v.iter()
        .zip(&norms)
        .map(|(vi, &n)| {
            let m = magnitude(n);
            let d = n + eps;
            Point::new(s0.x + m * (vi.x / d), s0.y + m * (vi.y / d))
        })
        .collect()
}

pub fn project_cvrp10k(coords: &[Point]) -> Vec<Point> {
    project_cvrp10k_with(coords, DIRECTION_EPS)
}

pub fn project_cvrp1k_blocks(b: &CvrpBlocks) -> CvrpBlocks {
    b.map(project_cvrp1k)
}

pub fn project_cvrp5k_blocks(b: &CvrpBlocks) -> CvrpBlocks {
    b.map(project_cvrp5k)
}

pub fn project_cvrp10k_blocks(b: &CvrpBlocks) -> CvrpBlocks {
    b.map(project_cvrp10k)
}

/// The built-in named projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Identity,
    /// Kind-aware seed normalisation (TSP or CVRP template).
    Seed,
    Tsp1k,
    Tsp5k,
    Tsp10k,
    Cvrp1k,
    Cvrp5k,
    Cvrp10k,
    Cvrp10kVerbatim,
}

impl Builtin {
    pub const ALL: [Builtin; 9] = [
        Builtin::Identity,
        Builtin::Seed,
        Builtin::Tsp1k,
        Builtin::Tsp5k,
        Builtin::Tsp10k,
        Builtin::Cvrp1k,
        Builtin::Cvrp5k,
        Builtin::Cvrp10k,
        Builtin::Cvrp10kVerbatim,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Identity => "identity",
            Builtin::Seed => "seed",
            Builtin::Tsp1k => "tsp1k",
            Builtin::Tsp5k => "tsp5k",
            Builtin::Tsp10k => "tsp10k",
            Builtin::Cvrp1k => "cvrp1k",
            Builtin::Cvrp5k => "cvrp5k",
            Builtin::Cvrp10k => "cvrp10k",
            Builtin::Cvrp10kVerbatim => "cvrp10k-verbatim",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn apply(&self, kind: ProblemKind, coords: &[Point]) -> Vec<Point> {
        match self {
            Builtin::Identity => coords.to_vec(),
            Builtin::Seed => match kind {
                ProblemKind::Tsp => project_seed_tsp(coords),
                ProblemKind::Cvrp => project_seed_cvrp(coords),
            },
            Builtin::Tsp1k => project_tsp1k(coords),
            Builtin::Tsp5k => project_tsp5k(coords),
            Builtin::Tsp10k => project_tsp10k(coords),
            Builtin::Cvrp1k => project_cvrp1k(coords),
            Builtin::Cvrp5k => project_cvrp5k(coords),
            Builtin::Cvrp10k => project_cvrp10k(coords),
            Builtin::Cvrp10kVerbatim => project_cvrp10k_with(coords, DIRECTION_EPS_VERBATIM),
        }
    }

    /// The evolved projection matched to an instance scale. Scales beyond
    /// 10K reuse the 10K strategy.
    pub fn for_scale(kind: ProblemKind, n: usize) -> Self {
        match (kind, n) {
            (ProblemKind::Tsp, n) if n < 3000 => Builtin::Tsp1k,
            (ProblemKind::Tsp, n) if n < 7500 => Builtin::Tsp5k,
            (ProblemKind::Tsp, _) => Builtin::Tsp10k,
            (ProblemKind::Cvrp, n) if n < 3000 => Builtin::Cvrp1k,
            (ProblemKind::Cvrp, n) if n < 7500 => Builtin::Cvrp5k,
            (ProblemKind::Cvrp, _) => Builtin::Cvrp10k,
        }
    }
}

/// A projection: either built in or a DSL program.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Builtin(Builtin),
    Program(DslProgram),
}

impl Strategy {
    pub fn apply(&self, kind: ProblemKind, coords: &[Point]) -> Vec<Point> {
        match self {
            Strategy::Builtin(b) => b.apply(kind, coords),
            Strategy::Program(p) => p.eval(coords),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Strategy::Builtin(b) => *b == Builtin::Identity,
            Strategy::Program(p) => p.steps().is_empty(),
        }
    }
}

impl From<Builtin> for Strategy {
    fn from(b: Builtin) -> Self {
        Strategy::Builtin(b)
    }
}

impl From<DslProgram> for Strategy {
    fn from(p: DslProgram) -> Self {
        Strategy::Program(p)
    }
}

/// Name-keyed lookup of built-in and registered DSL strategies.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    programs: BTreeMap<String, DslProgram>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a DSL strategy. Built-in names cannot be shadowed.
    pub fn register(&mut self, name: &str, program: DslProgram) -> Result<()> {
        if Builtin::from_name(name).is_some() {
            return Err(Error::InvalidConfig(alloc::format!(
                "`{name}` is a built-in strategy name"
            )));
        }
        self.programs.insert(name.to_string(), program);
        Ok(())
    }

    pub fn known_names(&self) -> Vec<String> {
        Builtin::ALL
            .iter()
            .map(|b| b.name().to_string())
            .chain(self.programs.keys().cloned())
            .collect()
    }

    pub fn lookup(&self, name: &str) -> Result<Strategy> {
        if let Some(b) = Builtin::from_name(name) {
            return Ok(Strategy::Builtin(b));
        }
        self.programs
            .get(name)
            .map(|p| Strategy::Program(p.clone()))
            .ok_or_else(|| Error::UnknownStrategy {
                name: name.to_string(),
                known: self.known_names().join(", "),
            })
    }
}

/// Convenience lookup against the built-in set only.
pub fn registry_lookup(name: &str) -> Result<Strategy> {
    Registry::new().lookup(name)
}
