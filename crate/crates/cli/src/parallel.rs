//! Rayon-backed evaluation. Results keep input order, so output does not
//! depend on the thread count.

use rayon::prelude::*;
use routeproj_core::construct::SolverConfig;
use routeproj_core::dsl::DslProgram;
use routeproj_core::evolution::{evaluate, EvaluationSet, FitnessEvaluator};
use routeproj_core::policy::Policy;

pub fn thread_pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Evaluates each program of a batch on its own worker.
pub struct ParallelEvaluator<'a, P: Policy> {
    pub set: &'a EvaluationSet,
    pub policy: &'a P,
    pub cfg: SolverConfig,
    pub seed: u64,
    pub pool: &'a rayon::ThreadPool,
}

impl<P: Policy> FitnessEvaluator for ParallelEvaluator<'_, P> {
    fn evaluate_batch(&self, programs: &[&DslProgram]) -> Vec<f64> {
        self.pool.install(|| {
            programs
                .par_iter()
                .map(|p| evaluate(p, self.set, self.policy, &self.cfg, self.seed))
                .collect()
        })
    }
}
