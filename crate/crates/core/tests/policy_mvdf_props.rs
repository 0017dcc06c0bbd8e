mod common;

use common::{random_points, rng, SubgraphSource};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use routeproj_core::mvdf::{apply_view, fuse, fused_logits, mvdf_select, ViewSet, VIEW_COUNT};
use routeproj_core::policy::{
    select_argmax, IsometryInvariant, Logits, Policy, ScaleSensitive, ScoreContext,
};
use routeproj_core::projection::project_seed_tsp;
use routeproj_core::{Distribution, Point, ProblemKind};

/// Scores each candidate by its raw x coordinate.
struct RawX;

impl Policy for RawX {
    fn score(&self, ctx: &ScoreContext<'_>) -> Logits {
        Logits(ctx.candidates().iter().map(|c| c.x).collect())
    }
}

fn logits() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![4 => -1e3..1e3f64, 1 => Just(f64::NEG_INFINITY)], 1..30)
}

proptest! {
    #[test]
    fn argmax_ignores_shift_and_positive_scale(v in logits(), shift in -1e3..1e3f64, scale in 1e-3..1e3f64) {
        let base = select_argmax(&Logits(v.clone()));
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        // Only assert where the winner is separated from the runner-up by more than rounding.
        let best = v[base];
        prop_assume!(v.iter().enumerate().all(|(i, &x)| i == base || x == best || best - x > 1e-6));
        let shifted = Logits(v.iter().map(|x| x + shift).collect());
        let scaled = Logits(v.iter().map(|x| x * scale).collect());
        prop_assert_eq!(select_argmax(&shifted).unwrap(), base);
        prop_assert_eq!(select_argmax(&scaled).unwrap(), base);
    }

    #[test]
    fn masked_candidates_are_never_chosen(seed in any::<u64>(), remaining in 0.0..1.0f64, k in 1usize..40) {
        let mut r = rng(seed);
        let coords = random_points(&mut r, k + 2, 0.0, 1.0);
        let demands: Vec<f64> = (0..k).map(|_| r.random_range(0.0..0.5)).collect();
        let ctx = ScoreContext {
            projected: &coords,
            kind: ProblemKind::Cvrp,
            remaining_capacity_fraction: remaining,
            candidate_demand_fractions: &demands,
            depot_allowed: r.random_bool(0.8),
        };
        for policy in [&ScaleSensitive::default() as &dyn Policy, &IsometryInvariant] {
            let l = policy.score(&ctx);
            prop_assert_eq!(l.len(), k + 1);
            for pick in [select_argmax(&l), mvdf_select(&ctx, policy, ViewSet::ALL)] {
                match pick {
                    Ok(j) if j < k => prop_assert!(demands[j] <= remaining),
                    Ok(j) => prop_assert!(j == k && ctx.depot_allowed),
                    Err(_) => prop_assert!(!ctx.depot_allowed && demands.iter().all(|&d| d > remaining)),
                }
            }
        }
    }

    #[test]
    fn fused_probabilities_sum_to_one(views in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 12), 1..9)) {
        let per_view: Vec<Logits> = views.into_iter().map(Logits).collect();
        let p = fuse(&per_view).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn isometry_invariant_logits_unchanged_by_views(seed in any::<u64>()) {
        let coords = random_points(&mut rng(seed), 20, 0.0, 1.0);
        let base = IsometryInvariant.score(&ScoreContext::tsp(&coords)).0;
        for m in 0..VIEW_COUNT {
            let v: Vec<Point> = coords.iter().map(|&p| apply_view(m, p)).collect();
            let l = IsometryInvariant.score(&ScoreContext::tsp(&v)).0;
            for (a, b) in base.iter().zip(&l) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn mvdf_matches_single_view_for_isometry_invariant_policy() {
    let mut r = rng(8);
    let src = SubgraphSource::new(2000, Distribution::Uniform, 8);
    for _ in 0..1000 {
        let sg = project_seed_tsp(&src.draw(&mut r, 100));
        let ctx = ScoreContext::tsp(&sg);
        assert_eq!(
            mvdf_select(&ctx, &IsometryInvariant, ViewSet::ALL).unwrap(),
            select_argmax(&IsometryInvariant.score(&ctx)).unwrap()
        );
    }
}

fn per_view(ctx: &ScoreContext<'_>, policy: &dyn Policy) -> Vec<Logits> {
    (0..VIEW_COUNT)
        .map(|m| {
            let v: Vec<Point> = ctx.projected.iter().map(|&p| apply_view(m, p)).collect();
            policy.score(&ctx.with_coords(&v))
        })
        .collect()
}

#[test]
fn raw_x_views_sum_to_four() {
    let coords = [
        Point::new(0.5, 0.5),
        Point::new(0.2, 0.2),
        Point::new(0.9, 0.9),
        Point::new(0.4, 0.6),
    ];
    let ctx = ScoreContext::tsp(&coords);
    assert_eq!(fused_logits(&per_view(&ctx, &RawX)).unwrap(), vec![4.0, 4.0]);
    assert_eq!(mvdf_select(&ctx, &RawX, ViewSet::ALL).unwrap(), 0);

    let mut r = rng(9);
    for _ in 0..1000 {
        let coords = random_points(&mut r, 30, 0.0, 1.0);
        let ctx = ScoreContext::tsp(&coords);
        let fused = fused_logits(&per_view(&ctx, &RawX)).unwrap();
        assert!(fused.iter().all(|&v| v == 4.0), "{fused:?}");
    }
}

#[test]
fn linear_term_cancels_under_fusion() {
    // With only the linear part active every candidate fuses to the same value.
    let linear = ScaleSensitive { w_last: 0.0, w_anchor: 0.0, w_x: 1.0, w_y: 1.0, ..Default::default() };
    let mut r = rng(10);
    for _ in 0..1000 {
        let coords = random_points(&mut r, 30, 0.0, 1.0);
        let fused = fused_logits(&per_view(&ScoreContext::tsp(&coords), &linear)).unwrap();
        assert!(fused.iter().all(|&v| v == 8.0), "{fused:?}");
    }
}

#[test]
fn fusion_is_order_free() {
    let mut r = rng(11);
    let policy = ScaleSensitive::default();
    for _ in 0..200 {
        let coords = random_points(&mut r, 30, 0.0, 1.0);
        let ctx = ScoreContext::tsp(&coords);
        let mut views = per_view(&ctx, &policy);
        let a = fused_logits(&views).unwrap();
        views.shuffle(&mut r);
        let b = fused_logits(&views).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn nearer_candidate_scores_higher() {
    let coords = [
        Point::new(0.9, 0.9),
        Point::new(0.1, 0.0),
        Point::new(0.9, 0.0),
        Point::new(0.0, 0.0),
    ];
    let l = ScaleSensitive { w_anchor: 0.0, w_x: 0.0, w_y: 0.0, ..Default::default() }
        .score(&ScoreContext::tsp(&coords));
    assert!(l.0[0] > l.0[1]);
}

#[test]
fn exp_terms_saturate_when_scale_grows() {
    let p = ScaleSensitive::default();
    let mut r = rng(12);
    let src = SubgraphSource::new(1000, Distribution::Uniform, 12);
    for _ in 0..200 {
        let sg = project_seed_tsp(&src.draw(&mut r, 100));
        let last = sg[sg.len() - 1];
        let nearest = sg[1..sg.len() - 1].iter().map(|c| c.dist(&last)).fold(f64::INFINITY, f64::min);
        let term = (-nearest / p.sigma_last).exp();
        assert!(term >= (-10.0f64).exp(), "unit-span term {term}");
        // Scaling the subgraph by 100 raises every term to the 100th power.
        let scaled = (-(100.0 * nearest) / p.sigma_last).exp();
        assert!(scaled <= term.powi(100) * (1.0 + 1e-9));
        if nearest >= p.sigma_last {
            assert!(scaled < (-100.0f64).exp());
        }
    }
    // Raw coordinates spanning 100: every proximity term is negligible.
    let raw: Vec<Point> = random_points(&mut r, 50, 0.0, 100.0);
    let l = p.score(&ScoreContext::tsp(&raw));
    let linear_only = ScaleSensitive { w_last: 0.0, w_anchor: 0.0, ..p }.score(&ScoreContext::tsp(&raw));
    let linear_pick = select_argmax(&linear_only).unwrap();
    assert_eq!(select_argmax(&l).unwrap(), linear_pick);
}
