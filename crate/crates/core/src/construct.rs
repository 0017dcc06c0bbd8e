//! Autoregressive construction over KNN-restricted action spaces, and
//! random re-construction (RRC) post-search.
//!
//! At every step the `k` nearest unvisited nodes of the current node form
//! the candidate set. The subgraph `[anchor | candidates | current]` is
//! projected by the strategy, scored by the policy (optionally through
//! multi-view fusion) and the argmax is appended. The TSP anchor is the
//! tour's first node; the CVRP anchor is the depot, which is also an action
//! (the trailing logit slot) that starts a new route.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::instance::{Instance, ProblemKind};
use crate::knn::KnnIndex;
use crate::mvdf::{mvdf_sample, mvdf_select, ViewSet};
use crate::policy::{select_argmax, Policy, ScoreContext};
use crate::projection::Strategy;
use crate::solution::{objective, Solution};

pub const DEFAULT_K: usize = 100;
/// Upper bound of the RRC segment length.
pub const RRC_MAX_SEGMENT: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub k: usize,
    /// Multi-view fusion over these views; `None` scores the single view.
    pub mvdf: Option<ViewSet>,
    /// Sample from the fused distribution instead of taking the argmax.
    pub sample_mvdf: bool,
    /// First TSP node.
    pub start_node: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            mvdf: None,
            sample_mvdf: false,
            start_node: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_mvdf(mut self, on: bool) -> Self {
        self.mvdf = on.then_some(ViewSet::ALL);
        self
    }
}

/// Per-step scoring inputs other than coordinates.
struct StepState<'a> {
    kind: ProblemKind,
    remaining: f64,
    demand_fracs: &'a [f64],
    depot_allowed: bool,
}

const TSP_STEP: StepState<'static> = StepState {
    kind: ProblemKind::Tsp,
    remaining: 1.0,
    demand_fracs: &[],
    depot_allowed: false,
};

struct Decider<'a> {
    strategy: &'a Strategy,
    policy: &'a dyn Policy,
    cfg: &'a SolverConfig,
    /// Kind handed to the projection.
    kind: ProblemKind,
    rng: ChaCha8Rng,
    raw: Vec<Point>,
}

impl<'a> Decider<'a> {
    fn new(
        strategy: &'a Strategy,
        policy: &'a dyn Policy,
        cfg: &'a SolverConfig,
        kind: ProblemKind,
        seed: u64,
    ) -> Self {
        Self {
            strategy,
            policy,
            cfg,
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            raw: Vec::with_capacity(cfg.k + 2),
        }
    }

    /// Fills the raw subgraph `[anchor | candidates | current]`.
    fn load(&mut self, inst: &Instance, anchor: usize, candidates: impl Iterator<Item = usize>, current: usize) {
        self.raw.clear();
        self.raw.push(inst.coords[anchor]);
        self.raw.extend(candidates.map(|c| inst.coords[c]));
        self.raw.push(inst.coords[current]);
    }

    fn decide(&mut self, step: StepState<'_>) -> Result<usize> {
        let projected = if self.strategy.is_identity() {
            None
        } else {
            Some(self.strategy.apply(self.kind, &self.raw))
        };
        let ctx = ScoreContext {
            projected: projected.as_deref().unwrap_or(&self.raw),
            kind: step.kind,
            remaining_capacity_fraction: step.remaining,
            candidate_demand_fractions: step.demand_fracs,
            depot_allowed: step.depot_allowed,
        };
        match self.cfg.mvdf {
            None => select_argmax(&self.policy.score(&ctx)),
            Some(views) if self.cfg.sample_mvdf => mvdf_sample(&ctx, self.policy, views, &mut self.rng),
            Some(views) => mvdf_select(&ctx, self.policy, views),
        }
    }
}

fn validate_config(cfg: &SolverConfig) -> Result<()> {
    if cfg.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    Ok(())
}

/// Builds a full solution for `inst`.
pub fn construct(
    inst: &Instance,
    strategy: &Strategy,
    policy: &dyn Policy,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Solution> {
    validate_config(cfg)?;
    inst.check_feasible()?;
    let mut decider = Decider::new(strategy, policy, cfg, inst.kind, seed);
    match inst.kind {
        ProblemKind::Tsp => {
            let start = cfg.start_node;
            if start >= inst.len() {
                return Err(Error::InvalidConfig(alloc::format!("start node {start} out of range")));
            }
            let rest: Vec<usize> = (0..inst.len()).filter(|&i| i != start).collect();
            let mut tour = Vec::with_capacity(inst.len());
            tour.push(start);
            tour.extend(greedy_path(inst, &rest, start, start, &mut decider)?);
            Ok(Solution::tsp(inst, tour))
        }
        ProblemKind::Cvrp => construct_cvrp(inst, &mut decider),
    }
}

/// Visits every node of `nodes` starting after `start`, with `anchor` as
/// the subgraph's first row. Returns the visiting order.
fn greedy_path(
    inst: &Instance,
    nodes: &[usize],
    start: usize,
    anchor: usize,
    decider: &mut Decider<'_>,
) -> Result<Vec<usize>> {
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    let local: Vec<Point> = nodes.iter().map(|&i| inst.coords[i]).collect();
    let mut index = KnnIndex::build(&local)?;
    let mut order = Vec::with_capacity(nodes.len());
    let mut current = start;
    let k = decider.cfg.k;
    while index.len_alive() > 0 {
        let cands = index.knn_unvisited(inst.coords[current], k, &[]);
        decider.load(inst, anchor, cands.iter().map(|&c| nodes[c]), current);
        let pick = decider.decide(TSP_STEP)?;
        let chosen = cands[pick];
        index.remove(chosen)?;
        current = nodes[chosen];
        order.push(current);
    }
    Ok(order)
}

fn construct_cvrp(inst: &Instance, decider: &mut Decider<'_>) -> Result<Solution> {
    let customers: Vec<usize> = (1..inst.len()).collect();
    let mut routes: Vec<Vec<usize>> = Vec::new();
    if customers.is_empty() {
        return Ok(Solution::new(inst, routes));
    }
    let local: Vec<Point> = customers.iter().map(|&i| inst.coords[i]).collect();
    let mut index = KnnIndex::build(&local)?;
    let cap = f64::from(inst.capacity);
    let k = decider.cfg.k;
    let mut remaining = inst.capacity;
    let mut route: Vec<usize> = Vec::new();
    let mut current = 0usize;
    let mut demand_fracs: Vec<f64> = Vec::with_capacity(k);
    while index.len_alive() > 0 {
        let cands = index.knn_unvisited(inst.coords[current], k, &[]);
        demand_fracs.clear();
        demand_fracs.extend(cands.iter().map(|&c| f64::from(inst.demands[customers[c]]) / cap));
        decider.load(inst, 0, cands.iter().map(|&c| customers[c]), current);
        let pick = decider.decide(StepState {
            kind: ProblemKind::Cvrp,
            remaining: f64::from(remaining) / cap,
            demand_fracs: &demand_fracs,
            depot_allowed: current != 0,
        })?;
        if pick == cands.len() {
            routes.push(core::mem::take(&mut route));
            remaining = inst.capacity;
            current = 0;
            continue;
        }
        let chosen = cands[pick];
        let node = customers[chosen];
        index.remove(chosen)?;
        remaining -= inst.demands[node];
        route.push(node);
        current = node;
    }
    if !route.is_empty() {
        routes.push(route);
    }
    Ok(Solution::new(inst, routes))
}

/// Random re-construction: repeatedly rebuild a random contiguous segment
/// between its fixed endpoints and keep the result if the objective does
/// not increase.
///
/// TSP segments run along the tour cycle; CVRP segments lie inside one
/// route (depot endpoints included). Segment length is uniform in
/// `[4, min(1000, n)]` at a uniform start. The rebuild uses the same
/// KNN + projection + policy step, with the far endpoint as the subgraph
/// anchor.
pub fn rrc(
    inst: &Instance,
    solution: &Solution,
    iterations: usize,
    strategy: &Strategy,
    policy: &dyn Policy,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Solution> {
    validate_config(cfg)?;
    solution.validate(inst)?;
    let mut best = solution.clone();
    if iterations == 0 {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decider = Decider::new(strategy, policy, cfg, inst.kind, seed ^ 0x5eed);
    let n = inst.len();
    let max_len = n.min(RRC_MAX_SEGMENT);
    for _ in 0..iterations {
        match inst.kind {
            ProblemKind::Tsp => {
                if max_len < 4 {
                    break;
                }
                let len = rng.random_range(4..=max_len);
                let at = rng.random_range(0..n);
                let tour = &best.routes[0];
                let seg: Vec<usize> = (0..len).map(|i| tour[(at + i) % n]).collect();
                let rebuilt = rebuild_segment(inst, &seg, &mut decider)?;
                if let Some(interior) = rebuilt {
                    let mut cand = tour.clone();
                    for (i, &node) in interior.iter().enumerate() {
                        cand[(at + 1 + i) % n] = node;
                    }
                    accept(inst, &mut best, vec![cand]);
                }
            }
            ProblemKind::Cvrp => {
                if best.routes.is_empty() {
                    break;
                }
                let r = rng.random_range(0..best.routes.len());
                let route = &best.routes[r];
                let span = route.len() + 2;
                let hi = max_len.min(span);
                if hi < 4 {
                    continue;
                }
                let len = rng.random_range(4..=hi);
                let at = rng.random_range(0..=span - len);
                let seq: Vec<usize> = core::iter::once(0)
                    .chain(route.iter().copied())
                    .chain(core::iter::once(0))
                    .collect();
                let seg = &seq[at..at + len];
                if let Some(interior) = rebuild_segment(inst, seg, &mut decider)? {
                    let mut new_seq = seq.clone();
                    new_seq[at + 1..at + len - 1].copy_from_slice(&interior);
                    let mut routes = best.routes.clone();
                    routes[r] = new_seq[1..new_seq.len() - 1].to_vec();
                    accept(inst, &mut best, routes);
                }
            }
        }
    }
    Ok(best)
}

fn path_length(inst: &Instance, path: &[usize]) -> f64 {
    path.windows(2).map(|w| inst.dist(w[0], w[1])).sum()
}

/// Rebuilds the interior of `seg`; `None` when the new path is longer.
fn rebuild_segment(inst: &Instance, seg: &[usize], decider: &mut Decider<'_>) -> Result<Option<Vec<usize>>> {
    let (start, end) = (seg[0], seg[seg.len() - 1]);
    let interior = &seg[1..seg.len() - 1];
    let order = greedy_path(inst, interior, start, end, decider)?;
    let mut new_path = Vec::with_capacity(seg.len());
    new_path.push(start);
    new_path.extend_from_slice(&order);
    new_path.push(end);
    if path_length(inst, &new_path) <= path_length(inst, seg) {
        Ok(Some(order))
    } else {
        Ok(None)
    }
}

fn accept(inst: &Instance, best: &mut Solution, routes: Vec<Vec<usize>>) {
    let obj = objective(inst, inst.kind, &routes);
    if obj <= best.objective {
        best.routes = routes;
        best.objective = obj;
    }
}
