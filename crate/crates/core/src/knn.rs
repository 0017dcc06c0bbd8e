//! k-nearest-unvisited queries over a kd-tree with tombstoned deletion.
//!
//! Removed nodes stay in the tree as tombstones; every tree node keeps a
//! count of live points below it so fully visited regions are skipped in
//! O(1). Once more than half of the tree is dead it is rebuilt over the
//! survivors. Results are exact: ordered by squared distance, then id.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Point;

const LEAF_SIZE: usize = 8;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct KdNode {
    lo: Point,
    hi: Point,
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    parent: u32,
    alive: u32,
}

impl KdNode {
    fn is_leaf(&self) -> bool {
        self.left == NONE
    }

    fn min_dist_sq(&self, q: &Point) -> f64 {
        let dx = (self.lo.x - q.x).max(q.x - self.hi.x).max(0.0);
        let dy = (self.lo.y - q.y).max(q.y - self.hi.y).max(0.0);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    id: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Spatial index over the nodes of one instance.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<Point>,
    alive: Vec<bool>,
    n_alive: usize,
    nodes: Vec<KdNode>,
    ids: Vec<u32>,
    leaf_of: Vec<u32>,
    dead_in_tree: usize,
}

impl KnnIndex {
    pub fn build(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("knn index needs at least one point"));
        }
        let n = points.len();
        let mut index = Self {
            points: points.to_vec(),
            alive: vec![true; n],
            n_alive: n,
            nodes: Vec::new(),
            ids: Vec::new(),
            leaf_of: vec![NONE; n],
            dead_in_tree: 0,
        };
        index.rebuild();
        Ok(index)
    }

    pub fn len_alive(&self) -> usize {
        self.n_alive
    }

    pub fn is_alive(&self, id: usize) -> bool {
        self.alive.get(id).copied().unwrap_or(false)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Marks `id` visited. It is never returned by later queries.
    pub fn remove(&mut self, id: usize) -> Result<()> {
        match self.alive.get(id) {
            None => return Err(Error::NodeOutOfRange(id)),
            Some(false) => return Err(Error::DoubleRemoval(id)),
            Some(true) => {}
        }
        self.alive[id] = false;
        self.n_alive -= 1;
        let mut node = self.leaf_of[id];
        while node != NONE {
            let n = &mut self.nodes[node as usize];
            n.alive -= 1;
            node = n.parent;
        }
        self.dead_in_tree += 1;
        if self.dead_in_tree * 2 > self.ids.len() {
            self.rebuild();
        }
        Ok(())
    }

    /// The `min(k, available)` live ids nearest to `query`, skipping ids in
    /// `exclude`, ascending by distance with ties broken by smaller id.
    pub fn knn_unvisited(&self, query: Point, k: usize, exclude: &[usize]) -> Vec<usize> {
        if k == 0 || self.n_alive == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, &query, k, exclude, &mut heap);
        heap.into_sorted_vec().into_iter().map(|c| c.id).collect()
    }

    fn search(
        &self,
        node: u32,
        q: &Point,
        k: usize,
        exclude: &[usize],
        heap: &mut BinaryHeap<Candidate>,
    ) {
        let n = &self.nodes[node as usize];
        if n.alive == 0 {
            return;
        }
        if heap.len() == k {
            if let Some(worst) = heap.peek() {
                if n.min_dist_sq(q) > worst.dist_sq {
                    return;
                }
            }
        }
        if n.is_leaf() {
            for &raw in &self.ids[n.start as usize..n.end as usize] {
                let id = raw as usize;
                if !self.alive[id] || exclude.contains(&id) {
                    continue;
                }
                let cand = Candidate {
                    dist_sq: self.points[id].dist_sq(q),
                    id,
                };
                if heap.len() < k {
                    heap.push(cand);
                } else if let Some(worst) = heap.peek() {
                    if cand < *worst {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            return;
        }
        let (a, b) = (n.left, n.right);
        let da = self.nodes[a as usize].min_dist_sq(q);
        let db = self.nodes[b as usize].min_dist_sq(q);
        let (first, second) = if db < da { (b, a) } else { (a, b) };
        self.search(first, q, k, exclude, heap);
        self.search(second, q, k, exclude, heap);
    }

    fn rebuild(&mut self) {
        self.ids = (0..self.points.len())
            .filter(|&i| self.alive[i])
            .map(|i| i as u32)
            .collect();
        self.nodes.clear();
        self.leaf_of.iter_mut().for_each(|l| *l = NONE);
        self.dead_in_tree = 0;
        if self.ids.is_empty() {
            return;
        }
        let len = self.ids.len();
        self.build_node(0, len, NONE);
    }

    fn build_node(&mut self, start: usize, end: usize, parent: u32) -> u32 {
        let slice = &self.ids[start..end];
        let first = self.points[slice[0] as usize];
        let (mut lo, mut hi) = (first, first);
        for &id in slice {
            let p = self.points[id as usize];
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let this = self.nodes.len() as u32;
        self.nodes.push(KdNode {
            lo,
            hi,
            start: start as u32,
            end: end as u32,
            left: NONE,
            right: NONE,
            parent,
            alive: (end - start) as u32,
        });
        if end - start <= LEAF_SIZE {
            for i in start..end {
                self.leaf_of[self.ids[i] as usize] = this;
            }
            return this;
        }
        let split_x = hi.x - lo.x >= hi.y - lo.y;
        let mid = (end - start) / 2;
        let points = &self.points;
        self.ids[start..end].select_nth_unstable_by(mid, |&a, &b| {
            let (pa, pb) = (points[a as usize], points[b as usize]);
            if split_x {
                pa.x.total_cmp(&pb.x)
            } else {
                pa.y.total_cmp(&pb.y)
            }
        });
        let left = self.build_node(start, start + mid, this);
        let right = self.build_node(start + mid, end, this);
        let node = &mut self.nodes[this as usize];
        node.left = left;
        node.right = right;
        this
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Vec<Point> {
        (0..n).map(|i| Point::new(i as f64, 0.0)).collect()
    }

    /// Sort-and-filter reference.
    fn brute(points: &[Point], alive: &[bool], q: Point, k: usize, exclude: &[usize]) -> Vec<usize> {
        let mut c: Vec<(f64, usize)> = (0..points.len())
            .filter(|&i| alive[i] && !exclude.contains(&i))
            .map(|i| (points[i].dist_sq(&q), i))
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        c.truncate(k);
        c.into_iter().map(|(_, i)| i).collect()
    }

    #[test]
    fn build_examples() {
        assert_eq!(KnnIndex::build(&line(4)).unwrap().len_alive(), 4);
        assert_eq!(KnnIndex::build(&line(1)).unwrap().len_alive(), 1);
        assert!(KnnIndex::build(&[]).is_err());
    }

    #[test]
    fn query_examples() {
        let idx = KnnIndex::build(&line(4)).unwrap();
        assert_eq!(idx.knn_unvisited(Point::new(0.0, 0.0), 2, &[0]), vec![1, 2]);
        assert_eq!(idx.knn_unvisited(Point::new(0.0, 0.0), 10, &[0]), vec![1, 2, 3]);
    }

    #[test]
    fn ties_break_by_id() {
        let mut pts = vec![Point::new(5.0, 5.0); 8];
        pts[4] = Point::new(1.0, 0.0);
        pts[7] = Point::new(-1.0, 0.0);
        let idx = KnnIndex::build(&pts).unwrap();
        assert_eq!(idx.knn_unvisited(Point::new(0.0, 0.0), 2, &[]), vec![4, 7]);
        // Same with many exact duplicates.
        let idx = KnnIndex::build(&vec![Point::new(0.5, 0.5); 30]).unwrap();
        assert_eq!(idx.knn_unvisited(Point::new(0.0, 0.0), 3, &[1]), vec![0, 2, 3]);
    }

    #[test]
    fn removal() {
        let mut idx = KnnIndex::build(&line(4)).unwrap();
        idx.remove(1).unwrap();
        assert!(!idx.knn_unvisited(Point::new(0.0, 0.0), 4, &[]).contains(&1));
        assert_eq!(idx.remove(1), Err(Error::DoubleRemoval(1)));
        assert_eq!(idx.remove(9), Err(Error::NodeOutOfRange(9)));
        for id in [0, 2, 3] {
            idx.remove(id).unwrap();
        }
        assert!(idx.knn_unvisited(Point::new(0.0, 0.0), 4, &[]).is_empty());
        assert_eq!(idx.len_alive(), 0);
    }

    #[test]
    fn interleaved_replay_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..300)
            .map(|_| Point::new(rng.random(), rng.random()))
            .collect();
        let mut idx = KnnIndex::build(&pts).unwrap();
        let mut alive = vec![true; pts.len()];
        for step in 0..300 {
            let q = Point::new(rng.random(), rng.random());
            let k = rng.random_range(1..20);
            assert_eq!(idx.knn_unvisited(q, k, &[]), brute(&pts, &alive, q, k, &[]), "step {step}");
            let live: Vec<usize> = (0..pts.len()).filter(|&i| alive[i]).collect();
            let victim = live[rng.random_range(0..live.len())];
            idx.remove(victim).unwrap();
            alive[victim] = false;
        }
        assert_eq!(idx.len_alive(), 0);
    }
}
