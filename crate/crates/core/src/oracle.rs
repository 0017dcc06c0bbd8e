//! Exact and reference solvers for grounding optimality gaps at small
//! scale, plus simple baselines.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, ProblemKind};
use crate::knn::KnnIndex;
use crate::solution::{route_length, Solution};

pub const HELD_KARP_LIMIT: usize = 18;
pub const BRUTE_FORCE_CVRP_LIMIT: usize = 8;
/// Neighbour list length used by 2-opt on larger inputs.
pub const TWO_OPT_NEIGHBORS: usize = 12;
/// Inputs up to this size use full neighbour lists in 2-opt.
pub const TWO_OPT_FULL_LIMIT: usize = 64;
/// Minimum improvement for a 2-opt move to count.
const IMPROVE_EPS: f64 = 1e-12;

fn expect_kind(inst: &Instance, kind: ProblemKind) -> Result<()> {
    if inst.kind == kind {
        Ok(())
    } else {
        Err(Error::WrongKind {
            expected: match kind {
                ProblemKind::Tsp => "TSP",
                ProblemKind::Cvrp => "CVRP",
            },
        })
    }
}

/// Optimal TSP tour by bitmask dynamic programming, starting at node 0.
pub fn held_karp(inst: &Instance) -> Result<Solution> {
    expect_kind(inst, ProblemKind::Tsp)?;
    let n = inst.len();
    if n > HELD_KARP_LIMIT {
        return Err(Error::ExactSizeLimit { n, limit: HELD_KARP_LIMIT });
    }
    if n == 0 {
        return Err(Error::EmptyInput("instance"));
    }
    if n <= 3 {
        return Ok(Solution::tsp(inst, (0..n).collect()));
    }
    // Node i >= 1 maps to bit i-1; dp[mask][j] is the shortest path from 0
    // through `mask` ending at node j+1.
    let m = n - 1;
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = inst.dist(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * m + j];
            if !cur.is_finite() {
                continue;
            }
            for t in 0..m {
                if mask & (1 << t) != 0 {
                    continue;
                }
                let next = mask | (1 << t);
                let cand = cur + inst.dist(j + 1, t + 1);
                if cand < dp[next * m + t] {
                    dp[next * m + t] = cand;
                    parent[next * m + t] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = f64::INFINITY;
    let mut end = 0;
    for j in 0..m {
        let c = dp[last_mask * m + j] + inst.dist(j + 1, 0);
        if c < best {
            best = c;
            end = j;
        }
    }
    let mut tour = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = end;
    loop {
        tour.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    tour.push(0);
    tour.reverse();
    Ok(Solution::tsp(inst, tour))
}

/// Optimal CVRP solution: every customer permutation, each split
/// optimally into capacity-feasible consecutive routes.
pub fn brute_force_cvrp(inst: &Instance) -> Result<Solution> {
    expect_kind(inst, ProblemKind::Cvrp)?;
    inst.check_feasible()?;
    let c = inst.customers();
    if c > BRUTE_FORCE_CVRP_LIMIT {
        return Err(Error::ExactSizeLimit { n: c, limit: BRUTE_FORCE_CVRP_LIMIT });
    }
    let mut perm: Vec<usize> = (1..=c).collect();
    let mut best_obj = f64::INFINITY;
    let mut best_routes = Vec::new();
    let mut heap_state = vec![0usize; c];
    let mut consider = |perm: &[usize]| {
        let (obj, routes) = optimal_split(inst, perm);
        if obj < best_obj {
            best_obj = obj;
            best_routes = routes;
        }
    };
    consider(&perm);
    // Heap's algorithm.
    let mut i = 1;
    while i < c {
        if heap_state[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(heap_state[i], i);
            }
            consider(&perm);
            heap_state[i] += 1;
            i = 1;
        } else {
            heap_state[i] = 0;
            i += 1;
        }
    }
    Ok(Solution::new(inst, best_routes))
}

/// Cheapest split of a giant tour into consecutive feasible routes.
fn optimal_split(inst: &Instance, perm: &[usize]) -> (f64, Vec<Vec<usize>>) {
    let n = perm.len();
    let mut best = vec![f64::INFINITY; n + 1];
    let mut cut = vec![0usize; n + 1];
    best[0] = 0.0;
    for i in 0..n {
        if !best[i].is_finite() {
            continue;
        }
        let mut load = 0u32;
        for j in i..n {
            load += inst.demands[perm[j]];
            if load > inst.capacity {
                break;
            }
            let cost = best[i] + route_length(inst, &perm[i..=j]);
            if cost < best[j + 1] {
                best[j + 1] = cost;
                cut[j + 1] = i;
            }
        }
    }
    let mut routes = Vec::new();
    let mut j = n;
    while j > 0 {
        let i = cut[j];
        routes.push(perm[i..j].to_vec());
        j = i;
    }
    routes.reverse();
    (best[n], routes)
}

fn neighbor_lists(inst: &Instance, nodes: &[usize]) -> Vec<Vec<usize>> {
    let m = nodes.len();
    if m <= TWO_OPT_FULL_LIMIT {
        return (0..m)
            .map(|a| {
                let mut v: Vec<usize> = (0..m).filter(|&b| b != a).collect();
                v.sort_by(|&x, &y| {
                    inst.dist(nodes[a], nodes[x])
                        .total_cmp(&inst.dist(nodes[a], nodes[y]))
                        .then(x.cmp(&y))
                });
                v
            })
            .collect();
    }
    let pts: Vec<_> = nodes.iter().map(|&i| inst.coords[i]).collect();
    let index = match KnnIndex::build(&pts) {
        Ok(ix) => ix,
        Err(_) => return vec![Vec::new(); m],
    };
    (0..m).map(|a| index.knn_unvisited(pts[a], TWO_OPT_NEIGHBORS, &[a])).collect()
}

/// 2-opt over a closed cycle of instance nodes, first improvement in a
/// fixed scan order. Returns the number of accepted moves.
pub fn two_opt_cycle(inst: &Instance, cycle: &mut [usize], max_passes: usize) -> usize {
    let n = cycle.len();
    if n < 4 {
        return 0;
    }
    // Work in local indices so neighbour lists and positions are dense.
    let nodes: Vec<usize> = cycle.to_vec();
    let neigh = neighbor_lists(inst, &nodes);
    let mut tour: Vec<usize> = (0..n).collect();
    let mut pos: Vec<usize> = (0..n).collect();
    let d = |a: usize, b: usize| inst.dist(nodes[a], nodes[b]);
    let mut moves = 0;
    for _ in 0..max_passes {
        let mut improved = false;
        for p in 0..n {
            let a = tour[p];
            // Successor side: replace (a, succ a), (c, succ c).
            let b = tour[(pos[a] + 1) % n];
            let dab = d(a, b);
            for &c in &neigh[a] {
                let dac = d(a, c);
                if dac >= dab {
                    break;
                }
                let dn = tour[(pos[c] + 1) % n];
                if c == b || dn == a {
                    continue;
                }
                let delta = dac + d(b, dn) - dab - d(c, dn);
                if delta < -IMPROVE_EPS {
                    if pos[b] <= pos[c] {
                        reverse(&mut tour, &mut pos, b, c);
                    } else {
                        reverse(&mut tour, &mut pos, dn, a);
                    }
                    moves += 1;
                    improved = true;
                    break;
                }
            }
            // Predecessor side: replace (pred a, a), (pred c, c).
            let a = tour[p];
            let b = tour[(pos[a] + n - 1) % n];
            let dab = d(a, b);
            for &c in &neigh[a] {
                let dac = d(a, c);
                if dac >= dab {
                    break;
                }
                let dp = tour[(pos[c] + n - 1) % n];
                if c == b || dp == a {
                    continue;
                }
                let delta = dac + d(b, dp) - dab - d(c, dp);
                if delta < -IMPROVE_EPS {
                    if pos[a] <= pos[dp] {
                        reverse(&mut tour, &mut pos, a, dp);
                    } else {
                        reverse(&mut tour, &mut pos, c, b);
                    }
                    moves += 1;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    for (slot, &l) in cycle.iter_mut().zip(&tour) {
        *slot = nodes[l];
    }
    moves
}

/// Reverses the tour slice from node `from` to node `to` (by position).
fn reverse(tour: &mut [usize], pos: &mut [usize], from: usize, to: usize) {
    let (i, j) = (pos[from], pos[to]);
    tour[i..=j].reverse();
    for (p, &node) in tour.iter().enumerate().take(j + 1).skip(i) {
        pos[node] = p;
    }
}

/// 2-opt local search from `start`. CVRP routes are improved one by one
/// with the depot as part of each cycle.
pub fn two_opt(inst: &Instance, start: &Solution, max_passes: usize) -> Result<Solution> {
    start.validate(inst)?;
    match inst.kind {
        ProblemKind::Tsp => {
            let mut tour = start.routes[0].clone();
            two_opt_cycle(inst, &mut tour, max_passes);
            let sol = Solution::tsp(inst, tour);
            Ok(if sol.objective <= start.objective { sol } else { start.clone() })
        }
        ProblemKind::Cvrp => {
            let mut routes = Vec::with_capacity(start.routes.len());
            for r in &start.routes {
                let mut cyc = Vec::with_capacity(r.len() + 1);
                cyc.push(0);
                cyc.extend_from_slice(r);
                two_opt_cycle(inst, &mut cyc, max_passes);
                let at = cyc.iter().position(|&v| v == 0).unwrap_or(0);
                cyc.rotate_left(at);
                let new_route = cyc[1..].to_vec();
                routes.push(if route_length(inst, &new_route) <= route_length(inst, r) {
                    new_route
                } else {
                    r.clone()
                });
            }
            Ok(Solution::new(inst, routes))
        }
    }
}

/// Nodes inserted in seeded random order, each at its cheapest position.
pub fn random_insertion(inst: &Instance, seed: u64) -> Result<Solution> {
    expect_kind(inst, ProblemKind::Tsp)?;
    if inst.is_empty() {
        return Err(Error::EmptyInput("instance"));
    }
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tour = Vec::with_capacity(order.len());
    tour.push(order[0]);
    for &x in &order[1..] {
        let m = tour.len();
        let mut best = (f64::INFINITY, 0);
        for i in 0..m {
            let (a, b) = (tour[i], tour[(i + 1) % m]);
            let cost = inst.dist(a, x) + inst.dist(x, b) - inst.dist(a, b);
            if cost < best.0 {
                best = (cost, i + 1);
            }
        }
        tour.insert(best.1, x);
    }
    Ok(Solution::tsp(inst, tour))
}

/// Greedy nearest unvisited node from `start`. For CVRP, the nearest
/// customer that still fits; the vehicle returns to the depot when none do.
pub fn nearest_neighbor(inst: &Instance, start: usize) -> Result<Solution> {
    if inst.is_empty() {
        return Err(Error::EmptyInput("instance"));
    }
    match inst.kind {
        ProblemKind::Tsp => {
            if start >= inst.len() {
                return Err(Error::NodeOutOfRange(start));
            }
            let mut index = KnnIndex::build(&inst.coords)?;
            index.remove(start)?;
            let mut tour = vec![start];
            let mut cur = start;
            while index.len_alive() > 0 {
                let next = index.knn_unvisited(inst.coords[cur], 1, &[])[0];
                index.remove(next)?;
                tour.push(next);
                cur = next;
            }
            Ok(Solution::tsp(inst, tour))
        }
        ProblemKind::Cvrp => nearest_neighbor_cvrp(inst),
    }
}

fn nearest_neighbor_cvrp(inst: &Instance) -> Result<Solution> {
    inst.check_feasible()?;
    let mut index = KnnIndex::build(&inst.coords)?;
    index.remove(0)?;
    let mut routes = Vec::new();
    let mut route = Vec::new();
    let mut load = inst.capacity;
    let mut cur = 0;
    while index.len_alive() > 0 {
        let mut k = 8;
        let next = loop {
            let cands = index.knn_unvisited(inst.coords[cur], k, &[]);
            if let Some(&c) = cands.iter().find(|&&c| inst.demands[c] <= load) {
                break Some(c);
            }
            if cands.len() < k {
                break None;
            }
            k *= 4;
        };
        match next {
            Some(c) => {
                index.remove(c)?;
                load -= inst.demands[c];
                route.push(c);
                cur = c;
            }
            None => {
                routes.push(core::mem::take(&mut route));
                load = inst.capacity;
                cur = 0;
            }
        }
    }
    if !route.is_empty() {
        routes.push(route);
    }
    Ok(Solution::new(inst, routes))
}

/// Relative gap `(obj - reference) / reference`.
pub fn gap(obj: f64, reference: f64) -> Result<f64> {
    if reference.is_nan() || reference <= 0.0 {
        return Err(Error::NonPositiveReference(reference));
    }
    Ok((obj - reference) / reference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub instance: String,
    pub objective: f64,
    pub reference: f64,
    pub gap: f64,
    /// Whether the reference is provably optimal.
    pub exact: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Wall time in seconds per named phase.
    pub phase_seconds: Vec<(String, f64)>,
}

impl GapReport {
    pub fn push(&mut self, instance: impl Into<String>, objective: f64, reference: f64, exact: bool) -> Result<()> {
        let g = gap(objective, reference)?;
        self.rows.push(GapRow {
            instance: instance.into(),
            objective,
            reference,
            gap: g,
            exact,
        });
        Ok(())
    }

    pub fn record_phase(&mut self, name: impl Into<String>, seconds: f64) {
        self.phase_seconds.push((name.into(), seconds.max(0.0)));
    }

    pub fn mean_gap(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        Some(self.rows.iter().map(|r| r.gap).sum::<f64>() / self.rows.len() as f64)
    }

    pub fn mean_objective(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        Some(self.rows.iter().map(|r| r.objective).sum::<f64>() / self.rows.len() as f64)
    }

    /// Rows with an exact reference whose gap is below `-tol`.
    pub fn exactness_violations(&self, tol: f64) -> Vec<&GapRow> {
        self.rows.iter().filter(|r| r.exact && r.gap < -tol).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::instance::gen_uniform;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn held_karp_trivial() {
        let sq = Instance::tsp("sq", pts(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]));
        assert_eq!(held_karp(&sq).unwrap().objective, 4.0);
        let line = Instance::tsp("l", pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]));
        assert_eq!(held_karp(&line).unwrap().objective, 4.0);
        let big = gen_uniform(19, ProblemKind::Tsp, None, 0).unwrap();
        assert!(matches!(held_karp(&big), Err(Error::ExactSizeLimit { n: 19, limit: 18 })));
    }

    #[test]
    fn brute_force_cvrp_trivial() {
        let one = Instance::cvrp("1", pts(&[(0.0, 0.0), (3.0, 4.0)]), vec![0, 1], 10);
        let s = brute_force_cvrp(&one).unwrap();
        assert_eq!(s.routes, vec![vec![1]]);
        assert_eq!(s.objective, 10.0);
        let two = Instance::cvrp("2", pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.1)]), vec![0, 6, 6], 10);
        assert_eq!(brute_force_cvrp(&two).unwrap().routes.len(), 2);
        let big = gen_uniform(9, ProblemKind::Cvrp, Some(10), 0).unwrap();
        assert!(matches!(brute_force_cvrp(&big), Err(Error::ExactSizeLimit { .. })));
    }

    #[test]
    fn two_opt_uncrosses() {
        let inst = Instance::tsp("x", pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        let crossed = Solution::tsp(&inst, vec![0, 2, 1, 3]);
        let out = two_opt(&inst, &crossed, 100).unwrap();
        assert!(out.objective < crossed.objective);
        assert_eq!(out.objective, 4.0);
        assert_eq!(two_opt(&inst, &out, 100).unwrap(), out);
    }

    #[test]
    fn two_opt_bounded_by_exact() {
        for seed in 0..10 {
            let inst = gen_uniform(10, ProblemKind::Tsp, None, seed).unwrap();
            let nn = nearest_neighbor(&inst, 0).unwrap();
            let opt = two_opt(&inst, &nn, 1000).unwrap();
            let exact = held_karp(&inst).unwrap();
            assert!(opt.objective <= nn.objective);
            assert!(opt.objective >= exact.objective - 1e-9);
        }
    }

    #[test]
    fn two_opt_large_uses_neighbor_lists() {
        let inst = gen_uniform(500, ProblemKind::Tsp, None, 3).unwrap();
        let ri = random_insertion(&inst, 1).unwrap();
        let out = two_opt(&inst, &ri, 50).unwrap();
        out.validate(&inst).unwrap();
        assert!(out.objective <= ri.objective);
    }

    #[test]
    fn two_opt_cvrp_keeps_routes() {
        let inst = gen_uniform(100, ProblemKind::Cvrp, Some(30), 4).unwrap();
        let nn = nearest_neighbor(&inst, 0).unwrap();
        let out = two_opt(&inst, &nn, 50).unwrap();
        out.validate(&inst).unwrap();
        assert_eq!(out.routes.len(), nn.routes.len());
        assert!(out.objective <= nn.objective + 1e-9);
    }

    #[test]
    fn triangle_all_agree() {
        let inst = Instance::tsp("t", pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]));
        let want = 2.0 + 2f64.sqrt();
        for seed in 0..5 {
            assert!((random_insertion(&inst, seed).unwrap().objective - want).abs() < 1e-12);
        }
        assert!((nearest_neighbor(&inst, 2).unwrap().objective - want).abs() < 1e-12);
        assert!((held_karp(&inst).unwrap().objective - want).abs() < 1e-12);
    }

    #[test]
    fn random_insertion_deterministic() {
        let inst = gen_uniform(200, ProblemKind::Tsp, None, 8).unwrap();
        assert_eq!(random_insertion(&inst, 5).unwrap(), random_insertion(&inst, 5).unwrap());
    }

    #[test]
    fn gap_values() {
        assert!((gap(26.11, 23.12).unwrap() - 0.1293).abs() < 5e-5);
        assert!((gap(72.59, 71.78).unwrap() - 0.0113).abs() < 5e-5);
        assert_eq!(gap(3.0, 3.0).unwrap(), 0.0);
        assert!(gap(1.0, 0.0).is_err());
        assert!(gap(1.0, -1.0).is_err());
    }

    #[test]
    fn report_mean() {
        let mut r = GapReport::default();
        r.push("a", 11.0, 10.0, true).unwrap();
        r.push("b", 12.0, 10.0, false).unwrap();
        assert!((r.mean_gap().unwrap() - 0.15).abs() < 1e-12);
        assert!(r.exactness_violations(1e-9).is_empty());
    }
}
