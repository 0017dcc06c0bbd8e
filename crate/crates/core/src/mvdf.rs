//! Multi-view decision fusion over the eight symmetries of the unit square.
//!
//! Each view of the projected subgraph is scored by the policy; the logits
//! are summed across views and passed through a softmax. Selection takes the
//! argmax of the fused scores (lowest index on ties).

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::policy::{argmax, Logits, Policy, ScoreContext};

pub const VIEW_COUNT: usize = 8;

/// Maps a point through view `m`, in the fixed order
/// `(x,y) (y,x) (x,1-y) (y,1-x) (1-x,y) (1-y,x) (1-x,1-y) (1-y,1-x)`.
pub fn apply_view(m: usize, p: Point) -> Point {
    let (x, y) = (p.x, p.y);
    let (a, b) = match m % VIEW_COUNT {
        0 => (x, y),
        1 => (y, x),
        2 => (x, 1.0 - y),
        3 => (y, 1.0 - x),
        4 => (1.0 - x, y),
        5 => (1.0 - y, x),
        6 => (1.0 - x, 1.0 - y),
        _ => (1.0 - y, 1.0 - x),
    };
    Point::new(a, b)
}

/// All eight views of `coords`; view 0 is the identity.
pub fn augment(coords: &[Point]) -> Vec<Vec<Point>> {
    (0..VIEW_COUNT)
        .map(|m| coords.iter().map(|&p| apply_view(m, p)).collect())
        .collect()
}

/// A subset of the eight views, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewSet(u8);

impl ViewSet {
    pub const ALL: ViewSet = ViewSet(0xFF);
    pub const IDENTITY: ViewSet = ViewSet(0x01);

    /// `None` if the list is empty or names a view outside `0..8`.
    pub fn from_indices(indices: &[usize]) -> Option<Self> {
        let mut mask = 0u8;
        for &i in indices {
            if i >= VIEW_COUNT {
                return None;
            }
            mask |= 1 << i;
        }
        (mask != 0).then_some(ViewSet(mask))
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..VIEW_COUNT).filter(move |&i| self.0 & (1 << i) != 0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl Default for ViewSet {
    fn default() -> Self {
        ViewSet::ALL
    }
}

/// Compensated sum: exact for the view sums of the coordinate feature,
/// and insensitive to view order in practice.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        if !v.is_finite() {
            return if v == f64::NEG_INFINITY || sum == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                v
            };
        }
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Elementwise sum of the per-view logits.
pub fn fused_logits(per_view: &[Logits]) -> Result<Vec<f64>> {
    let Some(first) = per_view.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if let Some(bad) = per_view.iter().find(|l| l.len() != len) {
        return Err(Error::LengthMismatch(len, bad.len()));
    }
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        let mut column = per_view.iter().map(|l| l.0[j]);
        if per_view.iter().any(|l| l.0[j] == f64::NEG_INFINITY) {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        out.push(neumaier_sum(&mut column));
    }
    Ok(out)
}

/// `softmax(sum_m l_m)`; masked entries get probability zero.
pub fn fuse(per_view: &[Logits]) -> Result<Vec<f64>> {
    let summed = fused_logits(per_view)?;
    Ok(softmax(&summed))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return alloc::vec![0.0; logits.len()];
    }
    let exps: Vec<f64> = logits
        .iter()
        .map(|&v| if v.is_finite() { libm::exp(v - max) } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn view_logits(ctx: &ScoreContext<'_>, policy: &dyn Policy, views: ViewSet) -> Vec<Logits> {
    let mut buf = Vec::with_capacity(ctx.projected.len());
    views
        .iter()
        .map(|m| {
            buf.clear();
            buf.extend(ctx.projected.iter().map(|&p| apply_view(m, p)));
            policy.score(&ctx.with_coords(&buf))
        })
        .collect()
}

/// Scores every selected view of `ctx.projected` and returns the argmax of
/// the fused probabilities.
pub fn mvdf_select(ctx: &ScoreContext<'_>, policy: &dyn Policy, views: ViewSet) -> Result<usize> {
    let fused = fused_logits(&view_logits(ctx, policy, views))?;
    argmax(&fused)
}

/// Diagnostic variant: samples an action from the fused distribution.
pub fn mvdf_sample(
    ctx: &ScoreContext<'_>,
    policy: &dyn Policy,
    views: ViewSet,
    rng: &mut impl Rng,
) -> Result<usize> {
    let p = fuse(&view_logits(ctx, policy, views))?;
    if p.iter().all(|&v| v == 0.0) {
        return Err(Error::NoFeasibleAction);
    }
    let mut u: f64 = rng.random();
    let mut last_positive = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            last_positive = i;
            if u < pi {
                return Ok(i);
            }
            u -= pi;
        }
    }
    Ok(last_positive)
}
