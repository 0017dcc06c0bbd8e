use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use routeproj::{solution_file, tsplib};
use routeproj_core::construct::{construct, SolverConfig};
use routeproj_core::instance::{generate, GenParams};
use routeproj_core::policy::PolicyKind;
use routeproj_core::projection::{Builtin, Strategy};
use routeproj_core::{Distribution, Instance, ProblemKind};

fn random_instance(r: &mut ChaCha8Rng) -> Instance {
    let kind = if r.random_bool(0.5) { ProblemKind::Tsp } else { ProblemKind::Cvrp };
    let dist = Distribution::SYNTHETIC[r.random_range(0..4)];
    let n = r.random_range(1..300);
    let params = GenParams { capacity: Some(r.random_range(9..100)), ..GenParams::default() };
    generate(n, kind, dist, &params, r.random()).unwrap()
}

#[test]
fn tsplib_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let inst = random_instance(&mut r);
        let text = tsplib::to_string(&inst);
        let back = tsplib::parse(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(tsplib::to_string(&back), text);
    }
}

#[test]
fn solution_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let cfg = SolverConfig { k: 8, ..SolverConfig::default() };
    for _ in 0..100 {
        let inst = random_instance(&mut r);
        let sol = construct(&inst, &Strategy::from(Builtin::Seed), &PolicyKind::default(), &cfg, 0).unwrap();
        let text = solution_file::to_string(&sol);
        assert_eq!(solution_file::parse(&text, &inst).unwrap(), sol);
    }
}

#[test]
fn tampered_or_malformed_solutions_are_rejected() {
    let inst = generate(6, ProblemKind::Cvrp, Distribution::Uniform, &GenParams::default(), 3).unwrap();
    let sol = construct(&inst, &Strategy::from(Builtin::Seed), &PolicyKind::default(), &SolverConfig::default(), 0).unwrap();
    let text = solution_file::to_string(&sol);
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("OBJECTIVE") { "OBJECTIVE : 0.5".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    let e = solution_file::parse(&tampered, &inst).unwrap_err().to_string();
    assert!(e.contains("corrupt"), "{e}");
    let empty_route = format!("{text}ROUTE :\n");
    assert!(solution_file::parse(&empty_route, &inst).is_err());
}

#[test]
fn parser_accepts_oversized_demand_but_solver_rejects_it() {
    let text = "NAME : big\nTYPE : CVRP\nDIMENSION : 3\nCAPACITY : 5\nEDGE_WEIGHT_TYPE : EUC_2D\n\
                NODE_COORD_SECTION\n1 0 0\n2 1 0\n3 0 1\nDEMAND_SECTION\n1 0\n2 9\n3 1\nDEPOT_SECTION\n1\n-1\nEOF\n";
    let inst = tsplib::parse(text).unwrap();
    assert_eq!(inst.len(), 3);
    assert!(construct(&inst, &Strategy::from(Builtin::Seed), &PolicyKind::default(), &SolverConfig::default(), 0).is_err());
}

#[test]
fn minimal_tsp_file() {
    let text = "NAME : tri\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n";
    let inst = tsplib::parse(text).unwrap();
    assert_eq!(inst.coords.len(), 3);
    assert!((inst.dist(1, 2) - 5.0).abs() < 1e-12);
}
