//! Batches of independent runs: recovery sweeps, pole-placement draws and
//! noise ensembles.
//!
//! With the `parallel` feature (on by default) batches can be spread over a
//! rayon pool; [`Execution::Sequential`] is always available and produces
//! identical results in identical order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::identifiability::{recover_full, recover_simplified, RecoveredParams};
use crate::integrator::IntegratorConfig;
use crate::model::{simulate, EpidemicState, ModelKind, ModelParams};
use crate::observation::output_jets;
use crate::observer::{verify_pole_placement, PolePlacementReport};
use crate::scenario::{EstimationSummary, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel;
        #[cfg(not(feature = "parallel"))]
        return Execution::Sequential;
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
    }
}

/// One recovery experiment: simulate from `(N - eps, eps, 0, 0)` up to `t`,
/// take the analytic jet there, and recover the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTripCase {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub epsilon: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTripOutcome {
    pub case: RoundTripCase,
    pub recovered: RecoveredParams,
    pub max_rel_error: f64,
}

/// Integration step used to reach `t`: at most 0.01 and at least ten steps.
fn step_for(t: f64) -> f64 {
    (t / 10.0).min(0.01)
}

pub fn round_trip(case: &RoundTripCase) -> Result<RoundTripOutcome> {
    let p = &case.params;
    let cfg = IntegratorConfig::new(step_for(case.t), case.t)?;
    let x0 = EpidemicState::initial(p.population, case.epsilon, 0.0, 0.0);
    let traj = simulate(case.kind, p, &x0, &cfg)?;
    let (t, state) = traj.last().expect("trajectory is never empty");
    let jet = output_jets(&EpidemicState::from_array(*state), p, case.kind)?.at(t);
    let y1_at_0 = p.alpha * case.epsilon;
    let recovered = match case.kind {
        ModelKind::Full => recover_full(&jet, y1_at_0, p.population),
        ModelKind::Simplified => recover_simplified(&jet, y1_at_0, p.population),
    }
    .map_err(|e| Error::AtTime {
        time: t,
        source: Box::new(e),
    })?;
    Ok(RoundTripOutcome {
        case: *case,
        recovered,
        max_rel_error: recovered.max_rel_error(p.rho, p.alpha, p.beta, case.epsilon),
    })
}

/// Random parameter sets with `beta > rho + alpha`, each paired with every
/// instant in `times`.
///
/// Rates are drawn in `[0.02, 0.5]`, `N` log-uniformly in `[1e4, 1e7]`,
/// `beta - rho - alpha` in `[0.05, 1]` and `eps / N` in `[1e-4, 1e-2)`.
pub fn random_round_trip_cases(kind: ModelKind, count: usize, times: &[f64], seed: u64) -> Vec<RoundTripCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count * times.len());
    for _ in 0..count {
        let rho = rng.random_range(0.02..=0.5);
        let alpha = rng.random_range(0.02..=0.5);
        let beta = rho + alpha + rng.random_range(0.05..=1.0);
        let population = 10f64.powf(rng.random_range(4.0..=7.0));
        let epsilon = population * rng.random_range(1e-4..1e-2);
        let params = ModelParams {
            beta,
            rho,
            alpha,
            population,
        };
        cases.extend(times.iter().map(|&t| RoundTripCase {
            kind,
            params,
            epsilon,
            t,
        }));
    }
    cases
}

pub fn round_trip_batch(cases: &[RoundTripCase], exec: Execution) -> Vec<Result<RoundTripOutcome>> {
    map(exec, cases, round_trip)
}

/// Random positive pole vectors: `lambda` in `[0.1, 10]`, `mu` log-uniform in `[1e-6, 1]`.
pub fn random_poles(count: usize, seed: u64) -> Vec<([f64; 4], [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lambda = std::array::from_fn(|_| rng.random_range(0.1..=10.0));
            let mu = std::array::from_fn(|_| 10f64.powf(rng.random_range(-6.0..=0.0)));
            (lambda, mu)
        })
        .collect()
}

pub fn pole_placement_batch(
    draws: &[([f64; 4], [f64; 3])],
    population: f64,
    exec: Execution,
) -> Vec<Result<PolePlacementReport>> {
    map(exec, draws, |(lambda, mu)| verify_pole_placement(*lambda, *mu, population))
}

/// Runs the estimation pipeline of `scenario` once per noise seed.
pub fn noise_ensemble(scenario: &Scenario, seeds: &[u64], exec: Execution) -> Vec<Result<EstimationSummary>> {
    map(exec, seeds, |&seed| {
        let mut sc = scenario.clone();
        sc.noise.seed = seed;
        sc.estimate().map(|e| e.summary(&sc.params))
    })
}
