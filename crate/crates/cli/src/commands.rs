//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context as _};
use clap::ValueEnum;
use rayon::prelude::*;
use routeproj_core::construct::{construct, rrc, SolverConfig};
use routeproj_core::dsl::DslProgram;
use routeproj_core::evolution::{
    evaluate, run as run_evolution, seed_individual, EvaluationSet, EvolutionConfig, HistoryRow, MockGenerator,
    StrategyGenerator,
};
use routeproj_core::instance::{generate, GenParams, Metric};
use routeproj_core::mvdf::ViewSet;
use routeproj_core::oracle::{
    brute_force_cvrp, gap, held_karp, nearest_neighbor, random_insertion, two_opt, GapReport, BRUTE_FORCE_CVRP_LIMIT,
    HELD_KARP_LIMIT,
};
use routeproj_core::policy::PolicyKind;
use routeproj_core::projection::{Builtin, Strategy};
use routeproj_core::{Distribution, Instance, ProblemKind, Solution};
use serde::Serialize;

use crate::args::*;
use crate::config::ConfigFile;
use crate::llm::{LlmConfig, LlmGenerator};
use crate::parallel::{thread_pool, ParallelEvaluator};
use crate::report::{fmt_gap, fmt_time, render_table, write_csv};
use crate::strategy_file::{StrategyFile, StrategySpec};
use crate::{solution_file, tsplib};

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, configuration or lookups; exit code 1.
    Config(anyhow::Error),
    /// Anything that fails once work has started; exit code 2.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn config(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

/// Default instance count for a scale, matching the usual benchmark test-set sizes.
pub fn default_count(kind: ProblemKind, n: usize) -> usize {
    match kind {
        ProblemKind::Tsp if n <= 1000 => 128,
        ProblemKind::Cvrp if n <= 5000 => 100,
        _ => 16,
    }
}

struct Env {
    conf: ConfigFile,
    pool: rayon::ThreadPool,
    rounding: bool,
}

pub fn run(cli: Cli) -> Outcome<String> {
    let conf = match &cli.config {
        Some(p) => ConfigFile::load(p).config()?,
        None => ConfigFile::default(),
    };
    let jobs = conf
        .pick(cli.jobs, "jobs", std::thread::available_parallelism().map_or(1, |n| n.get()))
        .config()?;
    if jobs == 0 {
        return Err(Failure::Config(anyhow!("--jobs must be at least 1")));
    }
    let rounding = cli.tsplib_rounding || conf.get::<bool>("tsplib_rounding").config()?.unwrap_or(false);
    let env = Env {
        pool: thread_pool(jobs).config()?,
        conf,
        rounding,
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(&env, a),
        Command::Solve(a) => cmd_solve(&env, a),
        Command::Evolve(a) => cmd_evolve(&env, a),
        Command::Bench(a) => cmd_bench(&env, a),
        Command::Oracle(a) => cmd_oracle(&env, a),
    }
}

fn kind_of(k: KindArg) -> ProblemKind {
    match k {
        KindArg::Tsp => ProblemKind::Tsp,
        KindArg::Cvrp => ProblemKind::Cvrp,
    }
}

fn dist_of(d: DistArg) -> Distribution {
    match d {
        DistArg::Uniform => Distribution::Uniform,
        DistArg::Clustered => Distribution::Clustered,
        DistArg::Explosion => Distribution::Explosion,
        DistArg::Implosion => Distribution::Implosion,
    }
}

fn create_dir(path: &Path) -> Outcome<()> {
    fs::create_dir_all(path)
        .with_context(|| format!("cannot create output directory {}", path.display()))
        .runtime()
}

fn instance_file_name(inst: &Instance) -> String {
    let ext = match inst.kind {
        ProblemKind::Tsp => "tsp",
        ProblemKind::Cvrp => "vrp",
    };
    format!("{}.{ext}", inst.name)
}

/// Deterministic synthetic instances named `<kind><n>_<dist>_<i>`.
fn synth(kind: ProblemKind, n: usize, dist: Distribution, capacity: Option<u32>, seeds: &[u64]) -> anyhow::Result<Vec<Instance>> {
    let params = GenParams {
        capacity,
        ..GenParams::default()
    };
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut inst = generate(n, kind, dist, &params, s)?;
            inst.name = format!("{}{n}_{dist}_{i:03}", kind.to_string().to_lowercase());
            Ok(inst)
        })
        .collect()
}

#[derive(Serialize)]
struct Manifest {
    kind: String,
    n: usize,
    distribution: String,
    capacity: Option<u32>,
    seed: u64,
    instances: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    seed: u64,
}

fn cmd_gen(env: &Env, a: GenArgs) -> Outcome<String> {
    let kind = kind_of(a.kind);
    if a.n == 0 {
        return Err(Failure::Config(anyhow!("instance size must be at least 1")));
    }
    let count = env.conf.pick(a.count, "count", default_count(kind, a.n)).config()?;
    let seed = env.conf.pick(a.seed, "seed", 0).config()?;
    let capacity = match kind {
        ProblemKind::Cvrp => a.capacity.or(env.conf.get("capacity").config()?),
        ProblemKind::Tsp => None,
    };
    let dist = dist_of(a.distribution);
    let seeds: Vec<u64> = (0..count as u64).map(|i| seed.wrapping_add(i)).collect();
    let instances = synth(kind, a.n, dist, capacity, &seeds).config()?;
    create_dir(&a.out)?;
    let mut entries = Vec::with_capacity(count);
    for (inst, &s) in instances.iter().zip(&seeds) {
        let file = instance_file_name(inst);
        tsplib::write(inst, &a.out.join(&file)).runtime()?;
        entries.push(ManifestEntry { file, seed: s });
    }
    let manifest = Manifest {
        kind: kind.to_string(),
        n: a.n,
        distribution: dist.to_string(),
        capacity: instances.first().filter(|i| i.kind == ProblemKind::Cvrp).map(|i| i.capacity),
        seed,
        instances: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).runtime()?;
    fs::write(a.out.join("manifest.json"), text + "\n").runtime()?;
    Ok(format!("wrote {count} {kind} instances of size {} to {}\n", a.n, a.out.display()))
}

struct SolverSetup {
    policy: PolicyKind,
    cfg: SolverConfig,
    seed: u64,
}

fn solver_setup(conf: &ConfigFile, a: &SolverArgs) -> Outcome<SolverSetup> {
    let policy_name: String = conf.pick(a.policy.clone(), "policy", "scale-sensitive".into()).config()?;
    let policy = conf.policy(&policy_name).config()?;
    let k = conf.pick(a.k, "k", routeproj_core::construct::DEFAULT_K).config()?;
    if k == 0 {
        return Err(Failure::Config(anyhow!("k must be at least 1")));
    }
    let views = match &a.views {
        Some(v) => Some(v.clone()),
        None => conf
            .raw("views")
            .map(|s| s.split(',').map(|t| t.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>())
            .transpose()
            .config()?,
    };
    let mvdf_on = a.mvdf || views.is_some() || conf.get::<bool>("mvdf").config()?.unwrap_or(false);
    let mvdf = if mvdf_on {
        match views {
            Some(v) => Some(ViewSet::from_indices(&v).ok_or_else(|| Failure::Config(anyhow!("views must be a non-empty subset of 0..8")))?),
            None => Some(ViewSet::ALL),
        }
    } else {
        None
    };
    let sample = a.mvdf_sample || conf.get::<bool>("mvdf_sample").config()?.unwrap_or(false);
    Ok(SolverSetup {
        policy,
        cfg: SolverConfig {
            k,
            mvdf,
            sample_mvdf: sample,
            start_node: 0,
        },
        seed: conf.pick(a.seed, "seed", 0).config()?,
    })
}

/// Reads instance files, expanding directories to their `.tsp`/`.vrp` files.
fn load_instances(paths: &[PathBuf], rounding: bool) -> Outcome<Vec<Instance>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))
                .config()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| matches!(f.extension().and_then(|e| e.to_str()), Some("tsp" | "vrp")))
                .collect();
            inner.sort();
            files.extend(inner);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(Failure::Config(anyhow!("no such instance path: {}", p.display())));
        }
    }
    if files.is_empty() {
        return Err(Failure::Config(anyhow!("no instance files found")));
    }
    files
        .iter()
        .map(|f| {
            let mut inst = tsplib::read(f).config()?;
            if inst.name.is_empty() {
                inst.name = f.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            }
            if rounding {
                inst.metric = Metric::RoundedEuc2d;
            }
            Ok(inst)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reference {
    objective: f64,
    exact: bool,
}

fn reference_label(r: Option<Reference>) -> &'static str {
    match r {
        Some(Reference { exact: true, .. }) => "exact",
        Some(_) => "2-opt",
        None => "none",
    }
}

fn fits_exact(inst: &Instance) -> bool {
    match inst.kind {
        ProblemKind::Tsp => inst.len() <= HELD_KARP_LIMIT,
        ProblemKind::Cvrp => inst.customers() <= BRUTE_FORCE_CVRP_LIMIT,
    }
}

fn exact_solution(inst: &Instance) -> anyhow::Result<Solution> {
    Ok(match inst.kind {
        ProblemKind::Tsp => held_karp(inst)?,
        ProblemKind::Cvrp => brute_force_cvrp(inst)?,
    })
}

fn two_opt_reference(inst: &Instance, passes: usize) -> anyhow::Result<Solution> {
    let start = nearest_neighbor(inst, 0)?;
    Ok(two_opt(inst, &start, passes)?)
}

const REFERENCE_PASSES: usize = 1000;

fn compute_reference(inst: &Instance, mode: ReferenceArg, dir: Option<&Path>) -> anyhow::Result<Option<Reference>> {
    if let Some(dir) = dir {
        let sol = solution_file::read(&dir.join(format!("{}.sol", inst.name)), inst)?;
        return Ok(Some(Reference {
            objective: sol.objective,
            exact: false,
        }));
    }
    let exact = match mode {
        ReferenceArg::None => return Ok(None),
        ReferenceArg::Exact => true,
        ReferenceArg::TwoOpt => false,
        ReferenceArg::Auto => fits_exact(inst),
    };
    let sol = if exact {
        exact_solution(inst)?
    } else {
        two_opt_reference(inst, REFERENCE_PASSES)?
    };
    Ok(Some(Reference {
        objective: sol.objective,
        exact,
    }))
}

fn solve_one(inst: &Instance, strategy: &Strategy, s: &SolverSetup, rrc_iters: usize) -> anyhow::Result<(Solution, f64, f64)> {
    let t = Instant::now();
    let sol = construct(inst, strategy, &s.policy, &s.cfg, s.seed)?;
    let t_construct = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let sol = if rrc_iters > 0 {
        rrc(inst, &sol, rrc_iters, strategy, &s.policy, &s.cfg, s.seed)?
    } else {
        sol
    };
    Ok((sol, t_construct, t.elapsed().as_secs_f64()))
}

#[derive(Serialize)]
struct SolveRow {
    instance: String,
    n: usize,
    strategy: String,
    policy: String,
    mvdf: bool,
    rrc: usize,
    objective: f64,
    reference: Option<f64>,
    reference_kind: &'static str,
    gap: Option<f64>,
    construct_s: f64,
    rrc_s: f64,
}

fn cmd_solve(env: &Env, a: SolveArgs) -> Outcome<String> {
    let setup = solver_setup(&env.conf, &a.solver)?;
    let strategy_arg: String = env.conf.pick(a.strategy.clone(), "strategy", "auto".into()).config()?;
    let spec = StrategySpec::resolve(&strategy_arg).config()?;
    let rrc_iters = env.conf.pick(a.rrc, "rrc", 0).config()?;
    let mode = match a.reference {
        Some(m) => m,
        None => match env.conf.raw("reference") {
            Some(v) => ReferenceArg::from_str(v, true).map_err(|e| Failure::Config(anyhow!("config key `reference`: {e}")))?,
            None => ReferenceArg::Auto,
        },
    };
    let instances = load_instances(&a.instances, env.rounding)?;
    create_dir(&a.out)?;
    let results: Vec<anyhow::Result<SolveRow>> = env.pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                let (name, strategy) = spec.for_instance(inst.kind, inst.customers());
                let (sol, tc, tr) = solve_one(inst, &strategy, &setup, rrc_iters)?;
                solution_file::write(&sol, &a.out.join(format!("{}.sol", inst.name)))?;
                let reference = compute_reference(inst, mode, a.reference_dir.as_deref())?;
                Ok(SolveRow {
                    instance: inst.name.clone(),
                    n: inst.customers(),
                    strategy: name,
                    policy: setup.policy.name().into(),
                    mvdf: setup.cfg.mvdf.is_some(),
                    rrc: rrc_iters,
                    objective: sol.objective,
                    reference: reference.map(|r| r.objective),
                    reference_kind: reference_label(reference),
                    gap: reference.map(|r| gap(sol.objective, r.objective)).transpose()?,
                    construct_s: tc,
                    rrc_s: tr,
                })
            })
            .collect()
    });
    let rows: Vec<SolveRow> = results.into_iter().collect::<anyhow::Result<_>>().runtime()?;
    write_csv(&a.out.join("report.csv"), &rows).runtime()?;

    let mut report = GapReport::default();
    let mut table = Vec::with_capacity(rows.len());
    for r in &rows {
        if let Some(reference) = r.reference {
            report.push(r.instance.clone(), r.objective, reference, r.reference_kind == "exact").runtime()?;
        }
        table.push(vec![
            r.instance.clone(),
            r.strategy.clone(),
            format!("{:.4}", r.objective),
            r.reference.map_or_else(|| "-".into(), |v| format!("{v:.4}")),
            r.reference_kind.into(),
            fmt_gap(r.gap),
            fmt_time(r.construct_s + r.rrc_s),
        ]);
    }
    let headers = ["instance", "strategy", "obj", "ref", "ref kind", "gap", "time"].map(String::from);
    let mut out = render_table(&headers, &table);
    let mean_obj = rows.iter().map(|r| r.objective).sum::<f64>() / rows.len() as f64;
    out.push_str(&format!("mean objective {mean_obj:.4}"));
    if let Some(g) = report.mean_gap() {
        out.push_str(&format!(", mean gap {}", fmt_gap(Some(g))));
    }
    out.push('\n');
    Ok(out)
}

#[derive(Serialize)]
struct HistoryCsv {
    generation: usize,
    best_fitness: f64,
    mean_fitness: f64,
    n_failures: usize,
}

impl From<&HistoryRow> for HistoryCsv {
    fn from(h: &HistoryRow) -> Self {
        Self {
            generation: h.generation,
            best_fitness: h.best_fitness,
            mean_fitness: h.mean_fitness,
            n_failures: h.n_failures,
        }
    }
}

#[derive(Serialize)]
struct TransferRow {
    n: usize,
    program: &'static str,
    mean_objective: f64,
}

fn cmd_evolve(env: &Env, a: EvolveArgs) -> Outcome<String> {
    let conf = &env.conf;
    let kind = kind_of(a.kind);
    let setup = solver_setup(conf, &a.solver)?;
    let n = conf.pick(a.n, "n", 1000).config()?;
    let eval_count = conf.pick(a.eval_count, "eval_count", 4).config()?;
    let population = conf.pick(a.population, "population", 20).config()?;
    let generations = conf.pick(a.generations, "generations", 105).config()?;
    let generator_kind = match a.generator {
        Some(g) => g,
        None => match conf.raw("generator") {
            Some(v) => GeneratorArg::from_str(v, true).map_err(|e| Failure::Config(anyhow!("config key `generator`: {e}")))?,
            None => GeneratorArg::Mock,
        },
    };
    let evo_cfg = EvolutionConfig {
        population,
        generations,
        offspring_per_operator: a.offspring_per_operator || conf.get::<bool>("offspring_per_operator").config()?.unwrap_or(false),
        seed: setup.seed,
        ..EvolutionConfig::default()
    };
    evo_cfg.validate().config()?;
    let (generator, created_by): (Box<dyn StrategyGenerator>, String) = match generator_kind {
        GeneratorArg::Mock => (Box::new(MockGenerator), "mock".into()),
        GeneratorArg::Llm => {
            let cfg = LlmConfig::from_env(Duration::from_secs(a.llm_timeout_secs), a.llm_retries, a.llm_temperature).config()?;
            let by = format!("llm:{}", cfg.model);
            (Box::new(LlmGenerator::new(cfg, kind)), by)
        }
    };
    let instances = match &a.eval_dir {
        Some(dir) => load_instances(std::slice::from_ref(dir), env.rounding)?,
        None => {
            // Offset seeds so evaluation data never coincides with `gen` output.
            let seeds: Vec<u64> = (0..eval_count as u64).map(|i| setup.seed.wrapping_add(1_000_000 + i)).collect();
            synth(kind, n, dist_of(a.distribution), None, &seeds).config()?
        }
    };
    let set = EvaluationSet::new(instances).config()?;
    if set.kind != kind {
        return Err(Failure::Config(anyhow!("evaluation instances are {}, expected {kind}", set.kind)));
    }
    create_dir(&a.out)?;
    let evaluator = ParallelEvaluator {
        set: &set,
        policy: &setup.policy,
        cfg: setup.cfg.clone(),
        seed: setup.seed,
        pool: &env.pool,
    };
    let t = Instant::now();
    let result = run_evolution(&evo_cfg, generator, &evaluator).runtime()?;
    let elapsed = t.elapsed().as_secs_f64();
    let history: Vec<HistoryCsv> = result.history.iter().map(HistoryCsv::from).collect();
    write_csv(&a.out.join("history.csv"), &history).runtime()?;
    let best = &result.best;
    let file = StrategyFile {
        name: format!("evolved-{}{n}", kind.to_string().to_lowercase()),
        description: best.description.clone(),
        source: best.canonical(),
        created_by,
        fitness: best.fitness(),
    };
    file.write(&a.out.join("best_strategy.json")).runtime()?;

    let mut out = format!(
        "best fitness {:.6} after {generations} generations ({})\nprogram: {}\n",
        best.fitness().unwrap_or(f64::NAN),
        fmt_time(elapsed),
        file.source
    );
    if !a.transfer.is_empty() {
        let mut rows = Vec::new();
        let seed_prog = seed_individual().program;
        for &m in &a.transfer {
            let seeds: Vec<u64> = (0..a.transfer_count as u64).map(|i| setup.seed.wrapping_add(2_000_000 + i)).collect();
            let tset = EvaluationSet::new(synth(kind, m, dist_of(a.distribution), None, &seeds).config()?).config()?;
            let progs: [(&'static str, &DslProgram); 2] = [("best", &best.program), ("seed", &seed_prog)];
            for (label, p) in progs {
                let obj = -env.pool.install(|| evaluate(p, &tset, &setup.policy, &setup.cfg, setup.seed));
                out.push_str(&format!("transfer n={m} {label}: mean objective {obj:.4}\n"));
                rows.push(TransferRow {
                    n: m,
                    program: label,
                    mean_objective: obj,
                });
            }
        }
        write_csv(&a.out.join("transfer.csv"), &rows).runtime()?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct BenchRow {
    scale: usize,
    method: String,
    mvdf: bool,
    rrc: usize,
    objective: f64,
    reference: Option<f64>,
    reference_kind: &'static str,
    gap: Option<f64>,
    time_s: f64,
}

fn cmd_bench(env: &Env, a: BenchArgs) -> Outcome<String> {
    let conf = &env.conf;
    let kind = kind_of(a.kind);
    let solver_args = SolverArgs {
        policy: a.policy.clone(),
        k: a.k,
        mvdf: false,
        views: None,
        mvdf_sample: false,
        seed: a.seed,
    };
    let base = solver_setup(conf, &solver_args)?;
    let rrc_budget = conf.pick(a.rrc, "rrc", 1000).config()?;
    let mode = a.reference.unwrap_or(ReferenceArg::Auto);
    let evolved = match &a.evolved {
        Some(p) => {
            let f = StrategyFile::read(p).config()?;
            StrategySpec::Named(f.name.clone(), Strategy::Program(f.program().config()?))
        }
        None => StrategySpec::Auto,
    };
    if a.scales.is_empty() || a.scales.contains(&0) || a.count == 0 {
        return Err(Failure::Config(anyhow!("bench needs positive scales and count")));
    }
    let methods: [(&str, StrategySpec); 3] = [
        ("identity", StrategySpec::Named("identity".into(), Builtin::Identity.into())),
        ("seed", StrategySpec::Named("seed".into(), Builtin::Seed.into())),
        ("evolved", evolved),
    ];
    create_dir(&a.out)?;
    let mut rows: Vec<BenchRow> = Vec::new();
    for &scale in &a.scales {
        let seeds: Vec<u64> = (0..a.count as u64).map(|i| base.seed.wrapping_add(i)).collect();
        let mut instances = synth(kind, scale, dist_of(a.distribution), None, &seeds).config()?;
        if env.rounding {
            instances.iter_mut().for_each(|i| i.metric = Metric::RoundedEuc2d);
        }
        let refs: Vec<Option<Reference>> = env
            .pool
            .install(|| instances.par_iter().map(|i| compute_reference(i, mode, None)).collect::<anyhow::Result<_>>())
            .runtime()?;
        let ref_mean = mean_opt(refs.iter().map(|r| r.map(|r| r.objective)));
        let ref_kind = refs.first().copied().flatten().map_or("none", |r| reference_label(Some(r)));
        for (label, spec) in &methods {
            for mvdf in [false, true] {
                let setup = SolverSetup {
                    policy: base.policy,
                    cfg: SolverConfig {
                        mvdf: mvdf.then_some(ViewSet::ALL),
                        ..base.cfg.clone()
                    },
                    seed: base.seed,
                };
                let dir = a.out.join("solutions").join(scale.to_string()).join(format!("{label}_mvdf{}", u8::from(mvdf)));
                create_dir(&dir)?;
                // One construction per instance feeds both the plain and RRC rows.
                let runs: Vec<(f64, f64, f64, f64)> = env
                    .pool
                    .install(|| {
                        instances
                            .par_iter()
                            .map(|inst| -> anyhow::Result<(f64, f64, f64, f64)> {
                                let (_, strategy) = spec.for_instance(kind, inst.customers());
                                let (sol, tc, _) = solve_one(inst, &strategy, &setup, 0)?;
                                let t = Instant::now();
                                let improved = rrc(inst, &sol, rrc_budget, &strategy, &setup.policy, &setup.cfg, setup.seed)?;
                                let tr = t.elapsed().as_secs_f64();
                                let plain = store_and_verify(inst, &sol, &dir.join(format!("{}.sol", inst.name)))?;
                                let post = store_and_verify(inst, &improved, &dir.join(format!("{}.rrc.sol", inst.name)))?;
                                Ok((plain, tc, post, tc + tr))
                            })
                            .collect::<anyhow::Result<_>>()
                    })
                    .runtime()?;
                for (rrc_iters, pick) in [(0usize, 0usize), (rrc_budget, 1)] {
                    let objs: Vec<f64> = runs.iter().map(|r| if pick == 0 { r.0 } else { r.2 }).collect();
                    let time: f64 = runs.iter().map(|r| if pick == 0 { r.1 } else { r.3 }).sum();
                    let gaps: Option<Vec<f64>> = objs
                        .iter()
                        .zip(&refs)
                        .map(|(&o, r)| r.map(|r| gap(o, r.objective)).transpose())
                        .collect::<Result<Option<Vec<f64>>, _>>()
                        .runtime()?;
                    rows.push(BenchRow {
                        scale,
                        method: label.to_string(),
                        mvdf,
                        rrc: rrc_iters,
                        objective: objs.iter().sum::<f64>() / objs.len() as f64,
                        reference: ref_mean,
                        reference_kind: ref_kind,
                        gap: gaps.map(|g| g.iter().sum::<f64>() / g.len() as f64),
                        time_s: time,
                    });
                }
            }
        }
    }
    write_csv(&a.out.join("bench.csv"), &rows).runtime()?;
    let text = bench_table(&a.scales, &rows);
    fs::write(a.out.join("bench.txt"), &text).runtime()?;
    Ok(text)
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Writes a solution, reads it back with objective verification and
/// returns the verified objective.
fn store_and_verify(inst: &Instance, sol: &Solution, path: &Path) -> anyhow::Result<f64> {
    solution_file::write(sol, path)?;
    let back = solution_file::read(path, inst)?;
    if back.routes != sol.routes {
        bail!("stored solution {} differs from the computed one", path.display());
    }
    Ok(back.objective)
}

/// Method x variant rows, one `Obj. (Gap)` and `Time` column pair per scale.
fn bench_table(scales: &[usize], rows: &[BenchRow]) -> String {
    let mut headers = vec!["method".to_string()];
    for s in scales {
        headers.push(format!("n={s} Obj. (Gap)"));
        headers.push("Time".into());
    }
    let mut table = Vec::new();
    let first_scale = scales[0];
    let mut ref_row = vec![format!("reference ({})", rows.first().map_or("none", |r| r.reference_kind))];
    for &s in scales {
        let r = rows.iter().find(|r| r.scale == s);
        ref_row.push(r.and_then(|r| r.reference).map_or_else(|| "-".into(), |v| format!("{v:.2}")));
        ref_row.push("-".into());
    }
    table.push(ref_row);
    for key in rows.iter().filter(|r| r.scale == first_scale) {
        let mut label = key.method.clone();
        if key.mvdf {
            label.push_str(" +mvdf");
        }
        if key.rrc > 0 {
            label.push_str(&format!(" +rrc{}", key.rrc));
        }
        let mut line = vec![label];
        for &s in scales {
            match rows
                .iter()
                .find(|r| r.scale == s && r.method == key.method && r.mvdf == key.mvdf && r.rrc == key.rrc)
            {
                Some(r) => {
                    line.push(format!("{:.2} ({})", r.objective, fmt_gap(r.gap)));
                    line.push(fmt_time(r.time_s));
                }
                None => line.extend(["-".into(), "-".into()]),
            }
        }
        table.push(line);
    }
    render_table(&headers, &table)
}

#[derive(Serialize)]
struct OracleRow {
    instance: String,
    solver: String,
    objective: f64,
    time_s: f64,
}

fn cmd_oracle(env: &Env, a: OracleArgs) -> Outcome<String> {
    let instances = load_instances(&a.instances, env.rounding)?;
    let seed = env.conf.pick(a.seed, "seed", 0).config()?;
    if a.solver == SolverArg::Exact {
        if let Some(big) = instances.iter().find(|i| !fits_exact(i)) {
            return Err(Failure::Config(anyhow!("{} exceeds the exact solver size limit", big.name)));
        }
    }
    if a.solver == SolverArg::RandomInsertion && instances.iter().any(|i| i.kind != ProblemKind::Tsp) {
        return Err(Failure::Config(anyhow!("random insertion supports TSP only")));
    }
    create_dir(&a.out)?;
    let solver_name = a.solver.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string());
    let rows: Vec<OracleRow> = env
        .pool
        .install(|| {
            instances
                .par_iter()
                .map(|inst| -> anyhow::Result<OracleRow> {
                    let t = Instant::now();
                    let sol = match a.solver {
                        SolverArg::Exact => exact_solution(inst)?,
                        SolverArg::TwoOpt => two_opt_reference(inst, a.passes)?,
                        SolverArg::RandomInsertion => random_insertion(inst, seed)?,
                        SolverArg::NearestNeighbor => nearest_neighbor(inst, 0)?,
                    };
                    let time_s = t.elapsed().as_secs_f64();
                    solution_file::write(&sol, &a.out.join(format!("{}.sol", inst.name)))?;
                    Ok(OracleRow {
                        instance: inst.name.clone(),
                        solver: solver_name.clone(),
                        objective: sol.objective,
                        time_s,
                    })
                })
                .collect::<anyhow::Result<_>>()
        })
        .runtime()?;
    write_csv(&a.out.join("oracle.csv"), &rows).runtime()?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.instance.clone(), r.solver.clone(), format!("{:.4}", r.objective), fmt_time(r.time_s)])
        .collect();
    Ok(render_table(&["instance", "solver", "obj", "time"].map(String::from), &table))
}
