#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use routeproj_core::instance::{generate, GenParams};
use routeproj_core::{Distribution, Instance, Point, ProblemKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force `k` nearest of `query` among `alive`, by (distance, id).
pub fn brute_knn(points: &[Point], alive: &[bool], query: Point, k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..points.len()).filter(|&i| alive[i]).collect();
    ids.sort_by(|&a, &b| {
        points[a]
            .dist_sq(&query)
            .total_cmp(&points[b].dist_sq(&query))
            .then(a.cmp(&b))
    });
    ids.truncate(k);
    ids
}

/// A TSP-layout subgraph `[first | k nearest of current | current]` drawn
/// from a random instance.
pub struct SubgraphSource {
    pub inst: Instance,
}

impl SubgraphSource {
    pub fn new(n: usize, dist: Distribution, seed: u64) -> Self {
        Self {
            inst: generate(n, ProblemKind::Tsp, dist, &GenParams::default(), seed).unwrap(),
        }
    }

    pub fn draw(&self, rng: &mut impl Rng, k: usize) -> Vec<Point> {
        let pts = &self.inst.coords;
        let n = pts.len();
        let current = rng.random_range(0..n);
        let first = rng.random_range(0..n);
        let mut alive = vec![true; n];
        alive[current] = false;
        let cands = nearest_by_select(pts, &alive, pts[current], k);
        let mut rows = Vec::with_capacity(k + 2);
        rows.push(pts[first]);
        rows.extend(cands.iter().map(|&c| pts[c]));
        rows.push(pts[current]);
        rows
    }
}

fn nearest_by_select(points: &[Point], alive: &[bool], q: Point, k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..points.len()).filter(|&i| alive[i]).collect();
    let key = |i: &usize| (points[*i].dist_sq(&q), *i);
    if ids.len() > k {
        ids.select_nth_unstable_by(k, |a, b| key(a).0.total_cmp(&key(b).0).then(a.cmp(b)));
        ids.truncate(k);
    }
    ids.sort_by(|a, b| key(a).0.total_cmp(&key(b).0).then(a.cmp(b)));
    ids
}

pub fn random_points(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

/// Rounds every coordinate to a multiple of `2^-bits`.
pub fn snap(points: &[Point], bits: i32) -> Vec<Point> {
    let s = 2f64.powi(bits);
    points
        .iter()
        .map(|p| Point::new((p.x * s).round() / s, (p.y * s).round() / s))
        .collect()
}
