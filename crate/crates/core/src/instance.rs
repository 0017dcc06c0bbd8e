//! Problem instances and synthetic generators.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, Normal};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    Tsp,
    Cvrp,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Tsp => "TSP",
            ProblemKind::Cvrp => "CVRP",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsp" => Ok(ProblemKind::Tsp),
            "cvrp" => Ok(ProblemKind::Cvrp),
            _ => Err(Error::InvalidConfig(format!("unknown problem kind `{s}`"))),
        }
    }
}

/// Spatial distribution an instance was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distribution {
    Uniform,
    Clustered,
    Explosion,
    Implosion,
    File,
}

impl Distribution {
    pub const SYNTHETIC: [Distribution; 4] = [
        Distribution::Uniform,
        Distribution::Clustered,
        Distribution::Explosion,
        Distribution::Implosion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Clustered => "clustered",
            Distribution::Explosion => "explosion",
            Distribution::Implosion => "implosion",
            Distribution::File => "file",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Distribution::Uniform),
            "clustered" | "cluster" => Ok(Distribution::Clustered),
            "explosion" => Ok(Distribution::Explosion),
            "implosion" => Ok(Distribution::Implosion),
            "file" => Ok(Distribution::File),
            _ => Err(Error::InvalidConfig(format!("unknown distribution `{s}`"))),
        }
    }
}

/// Edge cost convention used for objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Real Euclidean distance.
    #[default]
    Exact,
    /// TSPLIB `nint` rounding of the Euclidean distance.
    RoundedEuc2d,
}

/// A TSP or CVRP instance. For CVRP node 0 is the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub kind: ProblemKind,
    pub coords: Vec<Point>,
    /// CVRP only; `demands[0]` is the depot and is zero.
    pub demands: Vec<u32>,
    /// CVRP only; zero for TSP.
    pub capacity: u32,
    pub distribution: Distribution,
    pub metric: Metric,
}

impl Instance {
    pub fn tsp(name: impl Into<String>, coords: Vec<Point>) -> Self {
        Self {
            name: name.into(),
            kind: ProblemKind::Tsp,
            coords,
            demands: Vec::new(),
            capacity: 0,
            distribution: Distribution::File,
            metric: Metric::Exact,
        }
    }

    pub fn cvrp(name: impl Into<String>, coords: Vec<Point>, demands: Vec<u32>, capacity: u32) -> Self {
        Self {
            name: name.into(),
            kind: ProblemKind::Cvrp,
            coords,
            demands,
            capacity,
            distribution: Distribution::File,
            metric: Metric::Exact,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of customers (CVRP) or cities (TSP).
    pub fn customers(&self) -> usize {
        match self.kind {
            ProblemKind::Tsp => self.coords.len(),
            ProblemKind::Cvrp => self.coords.len().saturating_sub(1),
        }
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let d = self.coords[i].dist(&self.coords[j]);
        match self.metric {
            Metric::Exact => d,
            Metric::RoundedEuc2d => libm::floor(d + 0.5),
        }
    }

    /// Structural checks. Demands exceeding capacity are not rejected here;
    /// see [`Instance::check_feasible`].
    pub fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::EmptyInput("instance has no nodes"));
        }
        if let Some(i) = self.coords.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig(format!("node {i} has a non-finite coordinate")));
        }
        match self.kind {
            ProblemKind::Tsp => {
                if !self.demands.is_empty() || self.capacity != 0 {
                    return Err(Error::InvalidConfig("TSP instance carries demands".into()));
                }
            }
            ProblemKind::Cvrp => {
                if self.demands.len() != self.coords.len() {
                    return Err(Error::InvalidConfig(format!(
                        "{} demands for {} nodes",
                        self.demands.len(),
                        self.coords.len()
                    )));
                }
                if self.demands[0] != 0 {
                    return Err(Error::InvalidConfig("depot demand must be zero".into()));
                }
                if self.capacity == 0 {
                    return Err(Error::InvalidConfig("capacity must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Rejects CVRP instances where some customer cannot be served at all.
    pub fn check_feasible(&self) -> Result<()> {
        self.validate()?;
        if self.kind == ProblemKind::Cvrp {
            if let Some((i, d)) = self
                .demands
                .iter()
                .enumerate()
                .find(|(_, &d)| d > self.capacity)
            {
                return Err(Error::InfeasibleInstance(format!(
                    "node {i} demand {d} exceeds capacity {}",
                    self.capacity
                )));
            }
        }
        Ok(())
    }
}

/// Vehicle capacity used for generated CVRP instances of `n` customers.
pub fn default_capacity(n: usize) -> u32 {
    if n <= 1000 {
        200
    } else {
        300
    }
}

/// Constants of the synthetic generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Inclusive range of the number of cluster centres.
    pub clusters: (usize, usize),
    pub cluster_sigma: f64,
    /// Cluster centres are drawn uniformly from `[lo, hi]^2`.
    pub center_box: (f64, f64),
    pub disc_radius: f64,
    /// Mean of the exponential offset beyond the disc, as a fraction of the radius.
    pub explosion_offset: f64,
    pub implosion_factor: f64,
    pub demand_range: (u32, u32),
    pub capacity: Option<u32>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            clusters: (3, 8),
            cluster_sigma: 0.05,
            center_box: (0.2, 0.8),
            disc_radius: 0.3,
            explosion_offset: 0.1,
            implosion_factor: 0.3,
            demand_range: (1, 9),
            capacity: None,
        }
    }
}

fn clip_unit(p: Point) -> Point {
    Point::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
}

fn uniform_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random(), rng.random())
}

/// Draws `n` customers (TSP cities) from `dist`; a CVRP depot is prepended
/// uniformly at random.
pub fn generate(
    n: usize,
    kind: ProblemKind,
    dist: Distribution,
    params: &GenParams,
    seed: u64,
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidConfig("instance size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depot = (kind == ProblemKind::Cvrp).then(|| uniform_point(&mut rng));
    let points = match dist {
        Distribution::Uniform | Distribution::File => {
            (0..n).map(|_| uniform_point(&mut rng)).collect()
        }
        Distribution::Clustered => clustered(n, params, &mut rng)?,
        Distribution::Explosion => explosion(n, params, &mut rng)?,
        Distribution::Implosion => implosion(n, params, &mut rng),
    };
    let name = format!("{}{}-{}-{}", kind.to_string().to_ascii_lowercase(), n, dist, seed);
    let mut inst = match depot {
        None => Instance::tsp(name, points),
        Some(d) => {
            let mut coords = Vec::with_capacity(n + 1);
            coords.push(d);
            coords.extend(points);
            let (lo, hi) = params.demand_range;
            if lo == 0 || lo > hi {
                return Err(Error::InvalidConfig("demand range must be 1 <= lo <= hi".into()));
            }
            let mut demands = Vec::with_capacity(n + 1);
            demands.push(0);
            demands.extend((0..n).map(|_| rng.random_range(lo..=hi)));
            let capacity = params.capacity.unwrap_or_else(|| default_capacity(n));
            Instance::cvrp(name, coords, demands, capacity)
        }
    };
    inst.distribution = if dist == Distribution::File {
        Distribution::Uniform
    } else {
        dist
    };
    Ok(inst)
}

pub fn gen_uniform(n: usize, kind: ProblemKind, capacity: Option<u32>, seed: u64) -> Result<Instance> {
    let params = GenParams {
        capacity,
        ..GenParams::default()
    };
    generate(n, kind, Distribution::Uniform, &params, seed)
}

pub fn gen_clustered(n: usize, kind: ProblemKind, params: &GenParams, seed: u64) -> Result<Instance> {
    generate(n, kind, Distribution::Clustered, params, seed)
}

pub fn gen_explosion(n: usize, kind: ProblemKind, params: &GenParams, seed: u64) -> Result<Instance> {
    generate(n, kind, Distribution::Explosion, params, seed)
}

pub fn gen_implosion(n: usize, kind: ProblemKind, params: &GenParams, seed: u64) -> Result<Instance> {
    generate(n, kind, Distribution::Implosion, params, seed)
}

fn clustered(n: usize, params: &GenParams, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let (cmin, cmax) = params.clusters;
    if cmin == 0 || cmin > cmax {
        return Err(Error::InvalidConfig("cluster count range must be 1 <= lo <= hi".into()));
    }
    let (lo, hi) = params.center_box;
    let count = rng.random_range(cmin..=cmax);
    let centers: Vec<Point> = (0..count)
        .map(|_| Point::new(lo + (hi - lo) * rng.random::<f64>(), lo + (hi - lo) * rng.random::<f64>()))
        .collect();
    let noise = Normal::new(0.0, params.cluster_sigma)
        .map_err(|_| Error::InvalidConfig("cluster sigma must be finite and >= 0".into()))?;
    Ok((0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..count)];
            clip_unit(Point::new(c.x + noise.sample(rng), c.y + noise.sample(rng)))
        })
        .collect())
}

/// Disc centre such that the whole disc lies in the unit square.
fn disc_center(radius: f64, rng: &mut ChaCha8Rng) -> Point {
    let r = radius.clamp(0.0, 0.5);
    Point::new(r + (1.0 - 2.0 * r) * rng.random::<f64>(), r + (1.0 - 2.0 * r) * rng.random::<f64>())
}

fn explosion(n: usize, params: &GenParams, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let radius = params.disc_radius;
    let offset = Exp::new(1.0 / (params.explosion_offset * radius))
        .map_err(|_| Error::InvalidConfig("explosion offset must be positive".into()))?;
    let mut points: Vec<Point> = (0..n).map(|_| uniform_point(rng)).collect();
    let c = disc_center(radius, rng);
    for p in points.iter_mut() {
        let d = p.dist(&c);
        if d < radius {
            let (ux, uy) = if d > 0.0 {
                ((p.x - c.x) / d, (p.y - c.y) / d)
            } else {
                let a = core::f64::consts::TAU * rng.random::<f64>();
                (libm::cos(a), libm::sin(a))
            };
            let r = radius + offset.sample(rng);
            *p = clip_unit(Point::new(c.x + ux * r, c.y + uy * r));
        }
    }
    Ok(points)
}

fn implosion(n: usize, params: &GenParams, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let radius = params.disc_radius;
    let mut points: Vec<Point> = (0..n).map(|_| uniform_point(rng)).collect();
    let c = disc_center(radius, rng);
    let f = params.implosion_factor;
    for p in points.iter_mut() {
        if p.dist(&c) < radius {
            *p = clip_unit(Point::new(c.x + f * (p.x - c.x), c.y + f * (p.y - c.y)));
        }
    }
    points
}
