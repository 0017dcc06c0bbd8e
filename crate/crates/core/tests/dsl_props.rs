mod common;

use common::{random_points, rng, SubgraphSource};
use proptest::prelude::*;
use rand::Rng;
use routeproj_core::dsl::{
    builtin_source, fresh_program, mutate, random_program, DslProgram, Mutation, Step,
};
use routeproj_core::projection::Builtin;
use routeproj_core::{Distribution, Point, ProblemKind};

fn max_abs_diff(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.x - q.x).abs().max((p.y - q.y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn canonical_text_round_trips() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let p = random_program(&mut r, 8);
        let text = p.source();
        let back = DslProgram::parse(&text).unwrap();
        assert_eq!(back, p, "{text}");
        assert_eq!(back.source(), text);
    }
}

#[test]
fn evaluation_is_finite_and_shape_preserving() {
    let mut r = rng(4);
    let programs: Vec<DslProgram> = (0..1000)
        .map(|i| if i % 2 == 0 { random_program(&mut r, 10) } else { fresh_program(&mut r) })
        .collect();
    let inputs: Vec<Vec<Point>> = (0..100)
        .map(|i| {
            let n = r.random_range(1..30);
            let span = [1e-9, 1.0, 1e3, 1e150][i % 4];
            random_points(&mut r, n, -span, span)
        })
        .collect();
    for p in &programs {
        for c in &inputs {
            let out = p.eval(c);
            assert_eq!(out.len(), c.len());
            assert!(out.iter().all(Point::is_finite), "`{p}` on {c:?}");
        }
    }
}

#[test]
fn tsp_programs_match_builtins() {
    let mut r = rng(5);
    for b in [Builtin::Seed, Builtin::Tsp1k, Builtin::Tsp5k, Builtin::Tsp10k] {
        let program = DslProgram::parse(builtin_source(b).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for (i, dist) in Distribution::SYNTHETIC.iter().enumerate() {
            let src = SubgraphSource::new(2000, *dist, 50 + i as u64);
            for _ in 0..250 {
                let sg = src.draw(&mut r, 100);
                worst = worst.max(max_abs_diff(&program.eval(&sg), &b.apply(ProblemKind::Tsp, &sg)));
            }
        }
        assert!(worst <= 1e-12, "{b:?}: {worst}");
    }
}

#[test]
fn cvrp_programs_match_builtins() {
    let mut r = rng(6);
    for (b, tol) in [(Builtin::Cvrp1k, 1e-12), (Builtin::Cvrp5k, 1e-12), (Builtin::Cvrp10k, 1e-4)] {
        let program = DslProgram::parse(builtin_source(b).unwrap()).unwrap();
        for _ in 0..200 {
            let c = random_points(&mut r, 40, 0.0, 1.0);
            let d = max_abs_diff(&program.eval(&c), &b.apply(ProblemKind::Cvrp, &c));
            assert!(d <= tol, "{b:?}: {d}");
        }
    }
}

#[test]
fn empty_program_is_identity() {
    let c = random_points(&mut rng(7), 9, -4.0, 4.0);
    assert_eq!(DslProgram::parse("").unwrap().eval(&c), c);
}

#[test]
fn parse_errors_carry_position() {
    let e = DslProgram::parse("translate min;\nscale banana").unwrap_err().to_string();
    assert!(e.contains("line 2, column 7"), "{e}");
    let e = DslProgram::parse("scale const 0").unwrap_err().to_string();
    assert!(e.contains("const scale must be nonzero"), "{e}");
    assert!(DslProgram::parse("add 1 inf").is_err());
    assert!(DslProgram::parse("translate").is_err());
}

fn consts(p: &DslProgram) -> Vec<f64> {
    p.steps()
        .iter()
        .flat_map(|s| match s {
            Step::Scale(routeproj_core::dsl::ScaleBy::Const(c)) => vec![*c],
            Step::Add(routeproj_core::dsl::Offset::Const(a, b)) => vec![*a, *b],
            _ => vec![],
        })
        .collect()
}

proptest! {
    #[test]
    fn mutations_are_valid_and_deterministic(seed in any::<u64>(), pseed in any::<u64>(), op in 0..4usize) {
        let a = fresh_program(&mut rng(pseed));
        let b = fresh_program(&mut rng(pseed ^ 0x5555));
        let m = match op {
            0 => Mutation::Fresh,
            1 => Mutation::Crossover(&b),
            2 => Mutation::ReplaceStep,
            _ => Mutation::PerturbConsts,
        };
        let x = mutate(&a, m, seed);
        prop_assert!(x.is_valid());
        prop_assert_eq!(&x, &mutate(&a, m, seed));
    }

    #[test]
    fn self_crossover_reuses_steps(seed in any::<u64>(), pseed in any::<u64>()) {
        let a = fresh_program(&mut rng(pseed));
        let x = mutate(&a, Mutation::Crossover(&a), seed);
        prop_assert!(x.steps().iter().all(|s| a.steps().contains(s)));
    }

    #[test]
    fn perturbation_stays_within_factor_two(seed in any::<u64>(), c in 0.1..10.0f64) {
        let a = DslProgram::parse(&format!("scale const {c}; add {c} 1")).unwrap();
        let x = mutate(&a, Mutation::PerturbConsts, seed);
        let before = consts(&a);
        let after = consts(&x);
        prop_assert_eq!(before.len(), after.len());
        for (b, v) in before.iter().zip(&after) {
            let f = v / b;
            prop_assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&f), "factor {}", f);
        }
    }
}
