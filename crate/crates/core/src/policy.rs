//! Node-scoring policies standing in for a trained construction model.
//!
//! Logits are laid out as one entry per candidate, followed for CVRP by a
//! trailing depot slot. Candidates whose demand exceeds the remaining
//! capacity, and the depot while the vehicle sits at the depot, get `-inf`.

use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::instance::ProblemKind;

/// Everything a policy sees at one construction step.
#[derive(Debug, Clone, Copy)]
pub struct ScoreContext<'a> {
    /// Projected subgraph `[anchor | candidates | last]`.
    pub projected: &'a [Point],
    pub kind: ProblemKind,
    /// Remaining capacity over vehicle capacity; 1.0 for TSP.
    pub remaining_capacity_fraction: f64,
    /// Demand over vehicle capacity per candidate; empty for TSP.
    pub candidate_demand_fractions: &'a [f64],
    /// CVRP: whether returning to the depot is allowed this step.
    pub depot_allowed: bool,
}

impl<'a> ScoreContext<'a> {
    pub fn tsp(projected: &'a [Point]) -> Self {
        Self {
            projected,
            kind: ProblemKind::Tsp,
            remaining_capacity_fraction: 1.0,
            candidate_demand_fractions: &[],
            depot_allowed: false,
        }
    }

    /// Same context over a different coordinate view.
    pub fn with_coords(&self, projected: &'a [Point]) -> Self {
        Self { projected, ..*self }
    }

    pub fn candidate_count(&self) -> usize {
        self.projected.len().saturating_sub(2)
    }

    pub fn anchor(&self) -> Point {
        self.projected[0]
    }

    pub fn last(&self) -> Point {
        self.projected[self.projected.len() - 1]
    }

    pub fn candidates(&self) -> &'a [Point] {
        &self.projected[1..self.projected.len() - 1]
    }

    fn feasible(&self, j: usize) -> bool {
        match self.kind {
            ProblemKind::Tsp => true,
            ProblemKind::Cvrp => self
                .candidate_demand_fractions
                .get(j)
                .is_none_or(|&d| d <= self.remaining_capacity_fraction),
        }
    }

    /// Fills logits from per-candidate scores and a depot score, applying
    /// the capacity and depot masks.
    fn finish(&self, mut score: impl FnMut(usize, Point) -> f64, depot: f64) -> Logits {
        let mut values: Vec<f64> = self
            .candidates()
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if self.feasible(j) {
                    score(j, c)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        if self.kind == ProblemKind::Cvrp {
            values.push(if self.depot_allowed { depot } else { f64::NEG_INFINITY });
        }
        Logits(values)
    }
}

/// Unnormalised action scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Index of the largest logit; ties go to the lowest index.
pub fn select_argmax(logits: &Logits) -> Result<usize> {
    argmax(&logits.0)
}

pub(crate) fn argmax(values: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() || v == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoFeasibleAction)
}

/// A construction policy.
pub trait Policy: Sync {
    fn score(&self, ctx: &ScoreContext<'_>) -> Logits;
}

/// Surrogate whose decisions depend on the scale of its input: its
/// distance features saturate unless coordinates span roughly the unit
/// square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSensitive {
    /// Weight of the proximity to the current node.
    pub w_last: f64,
    /// Weight of the proximity to the anchor (first node / depot).
    pub w_anchor: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub sigma_last: f64,
    pub sigma_anchor: f64,
    /// Depot slot weight on used capacity.
    pub w_depot: f64,
}

impl Default for ScaleSensitive {
    fn default() -> Self {
        Self {
            w_last: 4.0,
            w_anchor: -1.0,
            w_x: 0.05,
            w_y: 0.05,
            sigma_last: 0.1,
            sigma_anchor: 0.5,
            w_depot: 2.0,
        }
    }
}

impl ScaleSensitive {
    pub fn candidate_logit(&self, last: Point, anchor: Point, c: Point) -> f64 {
        self.w_last * libm::exp(-last.dist(&c) / self.sigma_last)
            + self.w_anchor * libm::exp(-c.dist(&anchor) / self.sigma_anchor)
            + self.w_x * c.x
            + self.w_y * c.y
    }
}

impl Policy for ScaleSensitive {
    fn score(&self, ctx: &ScoreContext<'_>) -> Logits {
        let (last, anchor) = (ctx.last(), ctx.anchor());
        let depot = self.w_depot * (1.0 - ctx.remaining_capacity_fraction);
        ctx.finish(|_, c| self.candidate_logit(last, anchor, c), depot)
    }
}

/// Greedy-nearest control: `-d(last, c)`, unchanged by any isometry.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IsometryInvariant;

impl Policy for IsometryInvariant {
    fn score(&self, ctx: &ScoreContext<'_>) -> Logits {
        let last = ctx.last();
        let depot = -last.dist(&ctx.anchor());
        ctx.finish(|_, c| -last.dist(&c), depot)
    }
}

/// Policy selection by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    ScaleSensitive(ScaleSensitive),
    IsometryInvariant,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::ScaleSensitive(_) => "scale-sensitive",
            PolicyKind::IsometryInvariant => "isometry-invariant",
        }
    }
}

impl Default for PolicyKind {
    fn default() -> Self {
        PolicyKind::ScaleSensitive(ScaleSensitive::default())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scale-sensitive" | "scale_sensitive" => Ok(Self::default()),
            "isometry-invariant" | "isometry_invariant" => Ok(PolicyKind::IsometryInvariant),
            _ => Err(Error::UnknownPolicy(s.into())),
        }
    }
}

impl Policy for PolicyKind {
    fn score(&self, ctx: &ScoreContext<'_>) -> Logits {
        match self {
            PolicyKind::ScaleSensitive(p) => p.score(ctx),
            PolicyKind::IsometryInvariant => IsometryInvariant.score(ctx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn scale_sensitive_prefers_near_candidates() {
        let coords = [p(0.5, 0.5), p(0.1, 0.0), p(0.9, 0.0), p(0.0, 0.0)];
        let pol = ScaleSensitive {
            w_anchor: 0.0,
            w_x: 0.0,
            w_y: 0.0,
            ..ScaleSensitive::default()
        };
        let l = pol.score(&ScoreContext::tsp(&coords));
        assert!(l.0[0] > l.0[1]);
        assert_eq!(select_argmax(&l), Ok(0));
    }

    #[test]
    fn raw_large_coordinates_saturate() {
        let coords = [p(0.0, 0.0), p(30.0, 40.0), p(60.0, 80.0), p(100.0, 0.0)];
        let pol = ScaleSensitive::default();
        let ctx = ScoreContext::tsp(&coords);
        let l = pol.score(&ctx);
        for (j, c) in ctx.candidates().iter().enumerate() {
            let linear = pol.w_x * c.x + pol.w_y * c.y;
            assert!((l.0[j] - linear).abs() < 1e-12);
        }
    }

    #[test]
    fn cvrp_mask_and_depot_slot() {
        let coords = [p(0.5, 0.5), p(0.1, 0.1), p(0.2, 0.2), p(0.3, 0.3)];
        let demands = [0.5, 0.1];
        let ctx = ScoreContext {
            projected: &coords,
            kind: ProblemKind::Cvrp,
            remaining_capacity_fraction: 0.25,
            candidate_demand_fractions: &demands,
            depot_allowed: true,
        };
        for l in [ScaleSensitive::default().score(&ctx), IsometryInvariant.score(&ctx)] {
            assert_eq!(l.len(), 3);
            assert_eq!(l.0[0], f64::NEG_INFINITY);
            assert!(l.0[1].is_finite() && l.0[2].is_finite());
        }
        let depot = ScaleSensitive::default().score(&ctx).0[2];
        assert!((depot - 2.0 * 0.75).abs() < 1e-15);
        let at_depot = ScoreContext {
            depot_allowed: false,
            ..ctx
        };
        assert_eq!(IsometryInvariant.score(&at_depot).0[2], f64::NEG_INFINITY);
    }

    #[test]
    fn isometry_policy_is_greedy_nearest() {
        let coords = [p(0.0, 0.0), p(0.9, 0.9), p(0.45, 0.5), p(0.5, 0.5)];
        let l = IsometryInvariant.score(&ScoreContext::tsp(&coords));
        assert_eq!(select_argmax(&l), Ok(1));
        let single = [p(0.0, 0.0), p(0.9, 0.9), p(0.5, 0.5)];
        assert_eq!(select_argmax(&IsometryInvariant.score(&ScoreContext::tsp(&single))), Ok(0));
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(select_argmax(&Logits(vec![0.1, 0.9, 0.3])), Ok(1));
        assert_eq!(select_argmax(&Logits(vec![0.5, 0.5])), Ok(0));
        assert_eq!(
            select_argmax(&Logits(vec![f64::NEG_INFINITY, f64::NEG_INFINITY])),
            Err(Error::NoFeasibleAction)
        );
        assert_eq!(select_argmax(&Logits(vec![])), Err(Error::NoFeasibleAction));
    }

    #[test]
    fn policy_names() {
        assert_eq!("isometry-invariant".parse::<PolicyKind>(), Ok(PolicyKind::IsometryInvariant));
        assert_eq!("scale-sensitive".parse::<PolicyKind>().unwrap().name(), "scale-sensitive");
        assert!("neural".parse::<PolicyKind>().is_err());
    }
}
