//! Population-based search over projection programs.
//!
//! A population of at most `N` programs, sorted by fitness (negative mean
//! objective over an evaluation set), is grown by offspring from a
//! pluggable generator and truncated back to the `N` best distinct
//! programs each generation.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::construct::{construct, SolverConfig};
use crate::dsl::{fresh_program, mutate, DslProgram, Mutation, SEED_SOURCE};
use crate::error::{Error, Result};
use crate::instance::{Instance, ProblemKind};
use crate::policy::Policy;
use crate::projection::Strategy;

/// Offspring operators: two exploration and two modification variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// Initial population member.
    Init,
    /// A new program different from both parents.
    E1,
    /// A program combining the parents' shared ideas.
    E2,
    /// A structural change of one parent.
    M1,
    /// A parameter change of one parent.
    M2,
}

impl Operator {
    pub const CYCLE: [Operator; 4] = [Operator::E1, Operator::E2, Operator::M1, Operator::M2];

    pub fn arity(self) -> usize {
        match self {
            Operator::Init => 0,
            Operator::E1 | Operator::E2 => 2,
            Operator::M1 | Operator::M2 => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Operator::Init => "init",
            Operator::E1 => "e1",
            Operator::E2 => "e2",
            Operator::M1 => "m1",
            Operator::M2 => "m2",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub program: DslProgram,
    pub description: String,
    fitness: Option<f64>,
}

impl Individual {
    pub fn new(program: DslProgram, description: impl Into<String>) -> Self {
        Self {
            program,
            description: description.into(),
            fitness: None,
        }
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    /// Sets the fitness once; later calls are ignored.
    pub fn set_fitness(&mut self, f: f64) {
        if self.fitness.is_none() {
            self.fitness = Some(f);
        }
    }

    pub fn canonical(&self) -> String {
        self.program.source()
    }
}

fn fitness_key(ind: &Individual) -> f64 {
    ind.fitness.unwrap_or(f64::NEG_INFINITY)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    individuals: Vec<Individual>,
    capacity: usize,
    pub generation: usize,
}

impl Population {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("population size must be at least 1".into()));
        }
        Ok(Self {
            individuals: Vec::new(),
            capacity,
            generation: 0,
        })
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.individuals.iter().any(|i| i.canonical() == canonical)
    }

    pub fn best(&self) -> Option<&Individual> {
        self.individuals.first()
    }

    pub fn mean_fitness(&self) -> Option<f64> {
        if self.individuals.is_empty() {
            return None;
        }
        Some(self.individuals.iter().map(fitness_key).sum::<f64>() / self.individuals.len() as f64)
    }

    /// Merges evaluated offspring, drops duplicate programs (incumbents
    /// win), sorts by descending fitness and keeps the best `N`.
    pub fn update(&mut self, offspring: Vec<Individual>) {
        for ind in offspring {
            if ind.fitness.is_none() || self.contains(&ind.canonical()) {
                continue;
            }
            self.individuals.push(ind);
        }
        // Stable sort: among equal fitness, earlier members stay ahead.
        self.individuals
            .sort_by(|a, b| fitness_key(b).total_cmp(&fitness_key(a)));
        self.individuals.truncate(self.capacity);
    }
}

/// Selection weights `2^-r / sum_j 2^-r_j` for ranks `r = 1..=n`.
pub fn rank_probabilities(n: usize) -> Vec<f64> {
    let w: Vec<f64> = (1..=n).map(|r| libm::exp2(-(r as f64))).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Draws `count` population indices with replacement, rank-weighted.
pub fn select_parents(pop: &Population, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let probs = rank_probabilities(pop.len());
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            probs.len().saturating_sub(1)
        })
        .collect()
}

/// A generated candidate before parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub description: String,
    pub source: String,
}

/// Produces program text from an operator and its parents.
pub trait StrategyGenerator {
    fn generate(&mut self, op: Operator, parents: &[&Individual], seed: u64) -> Result<Draft>;
}

/// Deterministic generator built on the DSL mutators.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockGenerator;

impl StrategyGenerator for MockGenerator {
    fn generate(&mut self, op: Operator, parents: &[&Individual], seed: u64) -> Result<Draft> {
        let fallback = DslProgram::default();
        let first = parents.first().map_or(&fallback, |p| &p.program);
        let second = parents.get(1).map_or(first, |p| &p.program);
        let program = match op {
            Operator::Init | Operator::E1 => mutate(first, Mutation::Fresh, seed),
            Operator::E2 => mutate(first, Mutation::Crossover(second), seed),
            Operator::M1 => mutate(first, Mutation::ReplaceStep, seed),
            Operator::M2 => mutate(first, Mutation::PerturbConsts, seed),
        };
        Ok(Draft {
            description: format!("{op}: {}", program.description),
            source: program.source(),
        })
    }
}

/// Scores a batch of programs; higher is better.
pub trait FitnessEvaluator {
    fn evaluate_batch(&self, programs: &[&DslProgram]) -> Vec<f64>;
}

/// Fixed instances a program is scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub instances: Vec<Instance>,
    pub kind: ProblemKind,
    pub references: Option<Vec<f64>>,
}

impl EvaluationSet {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let kind = instances.first().ok_or(Error::EmptyInput("evaluation set"))?.kind;
        if instances.iter().any(|i| i.kind != kind) {
            return Err(Error::InvalidConfig("evaluation set mixes problem kinds".into()));
        }
        Ok(Self {
            instances,
            kind,
            references: None,
        })
    }
}

/// Negative mean construction objective of `program` over `set`.
/// Construction failures score negative infinity.
pub fn evaluate(
    program: &DslProgram,
    set: &EvaluationSet,
    policy: &dyn Policy,
    cfg: &SolverConfig,
    seed: u64,
) -> f64 {
    let strategy = Strategy::Program(program.clone());
    let mut total = 0.0;
    for inst in &set.instances {
        match construct(inst, &strategy, policy, cfg, seed) {
            Ok(s) => total += s.objective,
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    -(total / set.instances.len() as f64)
}

/// Evaluates programs one after another.
pub struct SerialEvaluator<'a> {
    pub set: &'a EvaluationSet,
    pub policy: &'a dyn Policy,
    pub cfg: SolverConfig,
    pub seed: u64,
}

impl FitnessEvaluator for SerialEvaluator<'_> {
    fn evaluate_batch(&self, programs: &[&DslProgram]) -> Vec<f64> {
        programs
            .iter()
            .map(|p| evaluate(p, self.set, self.policy, &self.cfg, self.seed))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Population size `N`.
    pub population: usize,
    /// Number of generations after initialisation.
    pub generations: usize,
    /// Produce `N` offspring per operator instead of `N` in total.
    pub offspring_per_operator: bool,
    pub seed: u64,
    /// Generator attempts per initial slot before padding with a random
    /// program.
    pub init_retries: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 8,
            generations: 10,
            offspring_per_operator: false,
            seed: 0,
            init_retries: 4,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::InvalidConfig("population size must be at least 1".into()));
        }
        if self.init_retries == 0 {
            return Err(Error::InvalidConfig("init retries must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub n_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub best: Individual,
    pub population: Population,
    /// One row for the initial population and one per generation.
    pub history: Vec<HistoryRow>,
}

/// Search state: population, fitness cache, failure counter.
pub struct Evolution<'a> {
    cfg: EvolutionConfig,
    generator: Box<dyn StrategyGenerator + 'a>,
    evaluator: &'a dyn FitnessEvaluator,
    rng: ChaCha8Rng,
    cache: BTreeMap<String, f64>,
    pub population: Population,
    pub history: Vec<HistoryRow>,
    failures: usize,
}

impl<'a> Evolution<'a> {
    pub fn new(
        cfg: EvolutionConfig,
        generator: Box<dyn StrategyGenerator + 'a>,
        evaluator: &'a dyn FitnessEvaluator,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            population: Population::new(cfg.population)?,
            cfg,
            generator,
            evaluator,
            cache: BTreeMap::new(),
            history: Vec::new(),
            failures: 0,
        })
    }

    /// Parses a draft; failures are counted and yield `None`.
    fn accept_draft(&mut self, draft: Result<Draft>) -> Option<Individual> {
        let parsed = draft.and_then(|d| {
            DslProgram::parse(&d.source).map(|p| Individual::new(p.with_description(d.description.clone()), d.description))
        });
        match parsed {
            Ok(ind) => Some(ind),
            Err(_) => {
                self.failures += 1;
                None
            }
        }
    }

    /// Assigns fitness to every individual, evaluating only unseen programs.
    fn evaluate_all(&mut self, inds: &mut [Individual]) {
        let mut todo: Vec<usize> = Vec::new();
        let mut keys: Vec<String> = Vec::new();
        for (i, ind) in inds.iter().enumerate() {
            let key = ind.canonical();
            if !self.cache.contains_key(&key) && !keys.contains(&key) {
                todo.push(i);
                keys.push(key);
            }
        }
        let programs: Vec<&DslProgram> = todo.iter().map(|&i| &inds[i].program).collect();
        let scores = self.evaluator.evaluate_batch(&programs);
        for (key, f) in keys.into_iter().zip(scores) {
            self.cache.insert(key, f);
        }
        for ind in inds.iter_mut() {
            if let Some(&f) = self.cache.get(&ind.canonical()) {
                ind.set_fitness(f);
            }
        }
    }

    fn record(&mut self) {
        self.history.push(HistoryRow {
            generation: self.population.generation,
            best_fitness: self.population.best().map_or(f64::NEG_INFINITY, fitness_key),
            mean_fitness: self.population.mean_fitness().unwrap_or(f64::NEG_INFINITY),
            n_failures: core::mem::take(&mut self.failures),
        });
    }

    /// Seeds the population with `seed` plus `N - 1` distinct generated
    /// programs, padding with random programs when the generator stalls.
    pub fn init(&mut self, seed: Individual) {
        let n = self.cfg.population;
        let mut members = Vec::with_capacity(n);
        let mut texts = Vec::with_capacity(n);
        texts.push(seed.canonical());
        members.push(seed);
        while members.len() < n {
            let mut placed = false;
            for _ in 0..self.cfg.init_retries {
                let s = self.rng.next_u64();
                let parents: Vec<&Individual> = members.first().into_iter().collect();
                let draft = self.generator.generate(Operator::Init, &parents, s);
                if let Some(ind) = self.accept_draft(draft) {
                    let t = ind.canonical();
                    if !texts.contains(&t) {
                        texts.push(t);
                        members.push(ind);
                        placed = true;
                        break;
                    }
                }
            }
            while !placed {
                let p = fresh_program(&mut self.rng);
                let t = p.source();
                if !texts.contains(&t) {
                    let desc = p.description.clone();
                    texts.push(t);
                    members.push(Individual::new(p, desc));
                    placed = true;
                }
            }
        }
        self.evaluate_all(&mut members);
        self.population.update(members);
        self.record();
    }

    fn operator_schedule(&self) -> Vec<Operator> {
        let n = self.cfg.population;
        if self.cfg.offspring_per_operator {
            Operator::CYCLE.iter().flat_map(|&op| core::iter::repeat_n(op, n)).collect()
        } else {
            (0..n).map(|i| Operator::CYCLE[i % 4]).collect()
        }
    }

    /// Runs one generation of offspring, evaluation and update.
    pub fn step(&mut self) {
        let mut offspring = Vec::new();
        let mut texts: Vec<String> = Vec::new();
        for op in self.operator_schedule() {
            let picks = select_parents(&self.population, 2, &mut self.rng);
            let s = self.rng.next_u64();
            let parents: Vec<&Individual> = picks
                .iter()
                .take(op.arity())
                .map(|&i| &self.population.individuals()[i])
                .collect();
            let draft = self.generator.generate(op, &parents, s);
            if let Some(ind) = self.accept_draft(draft) {
                let t = ind.canonical();
                if !texts.contains(&t) && !self.population.contains(&t) {
                    texts.push(t);
                    offspring.push(ind);
                }
            }
        }
        self.evaluate_all(&mut offspring);
        self.population.update(offspring);
        self.population.generation += 1;
        self.record();
    }

    pub fn finish(self) -> EvolutionResult {
        EvolutionResult {
            best: self.population.best().cloned().unwrap_or_else(|| Individual::new(DslProgram::default(), "")),
            population: self.population,
            history: self.history,
        }
    }
}

/// The default initial individual: the seed normalisation program.
pub fn seed_individual() -> Individual {
    let program = DslProgram::parse(SEED_SOURCE).unwrap_or_default();
    Individual::new(program, "seed normalisation: min shift, max-range scale, clip")
}

/// Initialisation plus `generations` generations.
pub fn run(
    cfg: &EvolutionConfig,
    generator: Box<dyn StrategyGenerator + '_>,
    evaluator: &dyn FitnessEvaluator,
) -> Result<EvolutionResult> {
    let mut evo = Evolution::new(cfg.clone(), generator, evaluator)?;
    evo.init(seed_individual());
    for _ in 0..cfg.generations {
        evo.step();
    }
    Ok(evo.finish())
}
