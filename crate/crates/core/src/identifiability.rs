//! Constructive parameter recovery from noise-free output jets.
//!
//! Given the outputs `y1 = alpha I`, `y2 = Q` and their derivatives at a single
//! instant `t > 0`, plus `y1(0)`, the rates `(rho, alpha, beta)` and the
//! initial infected count `epsilon` are recovered in closed form for both model
//! variants. Recovery fails at the singular points `Q = 0` and `I = 0`, where
//! the outputs carry no information on `rho` (resp. on anything).
//!
//! The two variants use different auxiliary functions named `h1` in the
//! derivations; they are kept apart as [`FullHChain`] (`h1 = y1'/y1`) and
//! [`SimplifiedHChain`] (`h1 = y1'/y1 + rho`).

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observation::OutputJet;

/// Recovered rates (1/day) and initial infected count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredParams {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl RecoveredParams {
    /// Largest relative deviation from reference values.
    pub fn max_rel_error(&self, rho: f64, alpha: f64, beta: f64, epsilon: f64) -> f64 {
        [
            (self.rho, rho),
            (self.alpha, alpha),
            (self.beta, beta),
            (self.epsilon, epsilon),
        ]
        .iter()
        .map(|(got, want)| ((got - want) / want).abs())
        .fold(0.0, f64::max)
    }
}

/// `(y1'/y1, d/dt of it, d2/dt2 of it)`.
fn log_derivatives(jet: &OutputJet) -> Result<(f64, f64, f64)> {
    if !(jet.y1 > 0.0) {
        return Err(Error::SingularPoint(format!(
            "y1 = {} (no infected individuals, outputs carry no information)",
            jet.y1
        )));
    }
    let l1 = jet.dy1 / jet.y1;
    let r2 = jet.d2y1 / jet.y1;
    let r3 = jet.d3y1 / jet.y1;
    let l2 = r2 - l1 * l1;
    let l3 = r3 - 3.0 * l1 * r2 + 2.0 * l1 * l1 * l1;
    Ok((l1, l2, l3))
}

/// `rho = (y1 - y2') / y2`, read off the quarantine dynamics.
pub fn recover_rho(jet: &OutputJet) -> Result<f64> {
    if !(jet.y2 > 0.0) {
        return Err(Error::SingularPoint(format!(
            "y2 = {} (empty quarantine, rho is not identifiable)",
            jet.y2
        )));
    }
    Ok((jet.y1 - jet.dy2) / jet.y2)
}

/// Auxiliary functions for the full model: `h1 = y1'/y1`, `h2 = (N - y2) h1'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullHChain {
    pub h1: f64,
    pub dh1: f64,
    pub h2: f64,
    pub dh2: f64,
}

impl FullHChain {
    pub fn from_jet(jet: &OutputJet, population: f64) -> Result<Self> {
        let (h1, dh1, d2h1) = log_derivatives(jet)?;
        let free = population - jet.y2;
        Ok(Self {
            h1,
            dh1,
            h2: free * dh1,
            dh2: -jet.dy2 * dh1 + free * d2h1,
        })
    }

    /// Coefficients `(a, b, c)` of `a X^2 + b X + c = 0` satisfied by `X = Q' - beta I`.
    pub fn quadratic(&self, jet: &OutputJet) -> [f64; 3] {
        [
            self.dh1,
            self.h2 * self.h1 - self.dh2,
            self.h2 * (-self.h1 * jet.dy2 + jet.d2y2),
        ]
    }
}

/// Auxiliary functions for the simplified model: `h1 = y1'/y1 + rho = beta S/N - alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedHChain {
    pub h1: f64,
    pub dh1: f64,
    pub d2h1: f64,
}

impl SimplifiedHChain {
    pub fn from_jet(jet: &OutputJet, rho: f64) -> Result<Self> {
        let (l1, l2, l3) = log_derivatives(jet)?;
        Ok(Self {
            h1: l1 + rho,
            dh1: l2,
            d2h1: l3,
        })
    }
}

/// Real roots of `a x^2 + b x + c`, computed without cancellation.
fn real_roots(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateInput(format!("leading coefficient is {a}")));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || !disc.is_finite() {
        return Err(Error::DegenerateInput(format!("discriminant is {disc}")));
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((q / a, c / q))
}

/// The unique negative root `X = Q' - beta I` of the full-model quadratic.
///
/// The quadratic does not involve `rho`, so this is defined at `t = 0` too.
pub fn quadratic_root(jet: &OutputJet, population: f64) -> Result<f64> {
    let chain = FullHChain::from_jet(jet, population)?;
    let [a, b, c] = chain.quadratic(jet);
    let (r1, r2) = real_roots(a, b, c)?;
    match (r1 < 0.0, r2 < 0.0) {
        (true, false) => Ok(r1),
        (false, true) => Ok(r2),
        _ => Err(Error::RootSelection(format!(
            "expected exactly one negative root, got {r1} and {r2}"
        ))),
    }
}

fn finish(rho: f64, alpha: f64, beta: f64, y1_at_0: f64) -> Result<RecoveredParams> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Regime(format!("recovered alpha = {alpha} is not positive")));
    }
    let epsilon = y1_at_0 / alpha;
    for (name, v) in [("rho", rho), ("beta", beta), ("epsilon", epsilon)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Regime(format!("recovered {name} = {v} is not positive")));
        }
    }
    Ok(RecoveredParams {
        rho,
        alpha,
        beta,
        epsilon,
    })
}

/// Full model: recovers `(rho, alpha, beta, epsilon)` from the jet at some `t > 0`.
pub fn recover_full(jet: &OutputJet, y1_at_0: f64, population: f64) -> Result<RecoveredParams> {
    let rho = recover_rho(jet)?;
    let chain = FullHChain::from_jet(jet, population)?;
    let x = quadratic_root(jet, population)?;
    let alpha = chain.h2 / x - chain.h1 - rho;
    // beta I = y2' - X and I = y1 / alpha
    let beta = alpha * (jet.dy2 - x) / jet.y1;
    finish(rho, alpha, beta, y1_at_0)
}

/// `beta = alpha - X(0) / epsilon`, using the quadratic root of the jet at `t = 0`.
pub fn beta_from_initial_root(jet_at_0: &OutputJet, alpha: f64, epsilon: f64, population: f64) -> Result<f64> {
    Ok(alpha - quadratic_root(jet_at_0, population)? / epsilon)
}

/// Simplified model: recovers `(rho, alpha, beta, epsilon)` from the jet at some `t > 0`.
pub fn recover_simplified(jet: &OutputJet, y1_at_0: f64, population: f64) -> Result<RecoveredParams> {
    let rho = recover_rho(jet)?;
    let chain = SimplifiedHChain::from_jet(jet, rho)?;
    if !(chain.dh1 < 0.0) {
        return Err(Error::Regime(format!(
            "h1' = {} must be negative (wrong model or no infected)",
            chain.dh1
        )));
    }
    // h1'' = h1' (h1 - rho) - (beta I / N) h1'
    let beta_i = population * (chain.h1 - rho - chain.d2h1 / chain.dh1);
    if !(beta_i > 0.0) {
        return Err(Error::Regime(format!("recovered beta*I = {beta_i} is not positive")));
    }
    let alpha = -population * chain.dh1 / beta_i - chain.h1;
    let beta = alpha * beta_i / jet.y1;
    finish(rho, alpha, beta, y1_at_0)
}

/// Signs at `t = 0` (with `Q(0) = 0`) underpinning the root choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialInequalities {
    /// `h1'(0) = (beta eps / N)(alpha - beta)(1 - eps/N)`.
    pub dh1_at_0: f64,
    /// `h2 (-h1 Q' + Q'')` at 0, `= alpha beta rho eps^2 (beta - alpha)(1 - eps/N)`.
    pub cterm_at_0: f64,
    pub ok: bool,
}

pub fn check_initial_inequalities(params: &ModelParams, epsilon: f64) -> InitialInequalities {
    let (b, r, a, n) = (params.beta, params.rho, params.alpha, params.population);
    let remaining = 1.0 - epsilon / n;
    let dh1_at_0 = b * epsilon / n * (a - b) * remaining;
    let cterm_at_0 = a * b * r * epsilon * epsilon * (b - a) * remaining;
    InitialInequalities {
        dh1_at_0,
        cterm_at_0,
        ok: dh1_at_0 < 0.0 && cterm_at_0 > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::IntegratorConfig;
    use crate::model::{simulate, EpidemicState, ModelKind};
    use crate::observation::output_jets;

    const TOL: f64 = 1e-6;

    fn reference_params() -> ModelParams {
        ModelParams::new(0.4, 0.1, 0.07, 1e5).unwrap()
    }

    /// Jet at time `t` along the trajectory started from `(N - eps, eps, 0, 0)`.
    fn jet_at(kind: ModelKind, p: &ModelParams, eps: f64, t: f64) -> (OutputJet, EpidemicState) {
        let cfg = IntegratorConfig::new(0.005, t).unwrap();
        let traj = simulate(kind, p, &EpidemicState::initial(p.population, eps, 0.0, 0.0), &cfg).unwrap();
        let (_, x) = traj.last().unwrap();
        let st = EpidemicState::from_array(*x);
        (output_jets(&st, p, kind).unwrap().at(t), st)
    }

    #[test]
    fn rho_from_experiment_start_values() {
        let jet = OutputJet {
            t: 0.0,
            y1: 0.7,
            dy1: 0.0,
            d2y1: 0.0,
            d3y1: 0.0,
            y2: 5.0,
            dy2: 0.2,
            d2y2: 0.0,
        };
        assert!((recover_rho(&jet).unwrap() - 0.1).abs() < 1e-15);
        let empty = OutputJet { y2: 0.0, ..jet };
        assert!(matches!(recover_rho(&empty), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn rho_is_time_invariant() {
        let p = reference_params();
        for kind in [ModelKind::Full, ModelKind::Simplified] {
            let a = recover_rho(&jet_at(kind, &p, 10.0, 0.5).0).unwrap();
            let b = recover_rho(&jet_at(kind, &p, 10.0, 3.0).0).unwrap();
            assert!(((a - b) / b).abs() < 1e-9);
            assert!((a - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn full_model_round_trip_at_several_instants() {
        let p = reference_params();
        for t in [0.1, 1.0, 2.0] {
            let (jet, _) = jet_at(ModelKind::Full, &p, 10.0, t);
            let rec = recover_full(&jet, p.alpha * 10.0, p.population).unwrap();
            assert!(rec.max_rel_error(0.1, 0.07, 0.4, 10.0) < TOL, "t={t}: {rec:?}");
        }
    }

    #[test]
    fn full_model_round_trip_second_parameter_set() {
        let p = ModelParams::new(0.6, 0.2, 0.05, 1e6).unwrap();
        let (jet, _) = jet_at(ModelKind::Full, &p, 50.0, 0.5);
        let rec = recover_full(&jet, p.alpha * 50.0, p.population).unwrap();
        assert!(rec.max_rel_error(0.2, 0.05, 0.6, 50.0) < TOL, "{rec:?}");
    }

    #[test]
    fn selected_root_matches_trajectory() {
        let p = reference_params();
        for t in [0.2, 1.0, 1.7] {
            let (jet, st) = jet_at(ModelKind::Full, &p, 10.0, t);
            let x = quadratic_root(&jet, p.population).unwrap();
            let truth = jet.dy2 - p.beta * st.i;
            assert!(x < 0.0);
            assert!(((x - truth) / truth).abs() < 1e-8);
        }
    }

    #[test]
    fn initial_root_route_gives_same_beta() {
        let p = reference_params();
        let eps = 10.0;
        let st0 = EpidemicState::initial(p.population, eps, 0.0, 0.0);
        let jet0 = output_jets(&st0, &p, ModelKind::Full).unwrap();
        let (jet, _) = jet_at(ModelKind::Full, &p, eps, 1.0);
        let rec = recover_full(&jet, jet0.y1, p.population).unwrap();
        let beta_alt = beta_from_initial_root(&jet0, rec.alpha, rec.epsilon, p.population).unwrap();
        assert!(((beta_alt - rec.beta) / rec.beta).abs() < 1e-8);
    }

    #[test]
    fn simplified_model_round_trip() {
        let p = reference_params();
        let (jet, _) = jet_at(ModelKind::Simplified, &p, 10.0, 1.0);
        let rec = recover_simplified(&jet, 0.7, p.population).unwrap();
        assert!(rec.max_rel_error(0.1, 0.07, 0.4, 10.0) < TOL, "{rec:?}");
    }

    #[test]
    fn simplified_beta_i_matches_trajectory() {
        let p = reference_params();
        let cfg = IntegratorConfig::new(0.01, 10.0).unwrap();
        let traj = simulate(
            ModelKind::Simplified,
            &p,
            &EpidemicState::initial(p.population, 10.0, 0.0, 0.0),
            &cfg,
        )
        .unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states).skip(10).step_by(10) {
            let st = EpidemicState::from_array(*x);
            let jet = output_jets(&st, &p, ModelKind::Simplified).unwrap();
            let rho = recover_rho(&jet).unwrap();
            let ch = SimplifiedHChain::from_jet(&jet, rho).unwrap();
            let beta_i = p.population * (ch.h1 - rho - ch.d2h1 / ch.dh1);
            let truth = p.beta * st.i;
            // Early on beta*I/N sits ~8 digits below the jet entries, so f64
            // rounding of the jet alone costs ~1e-8; it improves as I grows.
            let tol = if *t >= 3.0 { 1e-8 } else { 1e-7 };
            assert!(((beta_i - truth) / truth).abs() < tol, "t={t}");
            assert!(ch.dh1 < 0.0);
        }
    }

    #[test]
    fn simplified_recovery_at_epidemic_peak() {
        let p = reference_params();
        let s_peak = p.population * (p.rho + p.alpha) / p.beta;
        let st = EpidemicState::new(s_peak, 8000.0, 3000.0, p.population - s_peak - 11000.0);
        let jet = output_jets(&st, &p, ModelKind::Simplified).unwrap();
        assert!(jet.dy1.abs() < 1e-9);
        let rho = recover_rho(&jet).unwrap();
        let ch = SimplifiedHChain::from_jet(&jet, rho).unwrap();
        assert!(ch.dh1 < 0.0);
        assert!((ch.h1 - rho).abs() < 1e-12);
        let rec = recover_simplified(&jet, 0.07 * 10.0, p.population).unwrap();
        assert!(rec.max_rel_error(0.1, 0.07, 0.4, 10.0) < TOL, "{rec:?}");
    }

    #[test]
    fn simplified_rejects_non_decreasing_h1() {
        // dy1/y1 constant: pure exponential with no depletion
        let jet = OutputJet {
            t: 1.0,
            y1: 1.0,
            dy1: 0.2,
            d2y1: 0.04,
            d3y1: 0.008,
            y2: 3.0,
            dy2: 0.7,
            d2y2: 0.1,
        };
        assert!(matches!(recover_simplified(&jet, 1.0, 1e5), Err(Error::Regime(_))));
    }

    #[test]
    fn recovery_rejects_singular_points() {
        let p = reference_params();
        let st0 = EpidemicState::initial(p.population, 10.0, 0.0, 0.0);
        let jet0 = output_jets(&st0, &p, ModelKind::Full).unwrap();
        assert!(matches!(recover_full(&jet0, 0.7, p.population), Err(Error::SingularPoint(_))));
        let no_inf = EpidemicState::new(9e4, 0.0, 100.0, 9900.0);
        let jet = output_jets(&no_inf, &p, ModelKind::Full).unwrap();
        assert!(matches!(recover_full(&jet, 0.7, p.population), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn quadratic_with_two_positive_roots_is_rejected() {
        assert!(matches!(real_roots(1.0, -3.0, 2.0), Ok((a, b)) if (a - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15));
        assert!(matches!(real_roots(1.0, 0.0, 1.0), Err(Error::DegenerateInput(_))));
        assert!(matches!(real_roots(0.0, 1.0, 1.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn initial_inequalities_at_experiment_values() {
        let r = check_initial_inequalities(&reference_params(), 10.0);
        let dh1 = 0.4 * 10.0 / 1e5 * (0.07 - 0.4) * (1.0 - 10.0 / 1e5);
        let cterm = 0.07 * 0.4 * 0.1 * 100.0 * (0.4 - 0.07) * (1.0 - 10.0 / 1e5);
        assert!(((r.dh1_at_0 - dh1) / dh1).abs() < 1e-14);
        assert!(((r.cterm_at_0 - cterm) / cterm).abs() < 1e-14);
        assert!((r.dh1_at_0 - -1.31987e-5).abs() < 1e-10);
        assert!((r.cterm_at_0 - 0.0923908).abs() < 1e-7);
        assert!(r.ok);
    }

    #[test]
    fn initial_inequalities_agree_with_jets() {
        let p = reference_params();
        let st0 = EpidemicState::initial(p.population, 10.0, 0.0, 0.0);
        let jet0 = output_jets(&st0, &p, ModelKind::Full).unwrap();
        let ch = FullHChain::from_jet(&jet0, p.population).unwrap();
        let [_, _, c] = ch.quadratic(&jet0);
        let r = check_initial_inequalities(&p, 10.0);
        assert!(((ch.dh1 - r.dh1_at_0) / r.dh1_at_0).abs() < 1e-9);
        assert!(((c - r.cterm_at_0) / r.cterm_at_0).abs() < 1e-8);
    }

    #[test]
    fn equal_beta_and_alpha_fails_inequalities() {
        let p = ModelParams::new(0.1, 0.1, 0.1, 1e5).unwrap();
        let r = check_initial_inequalities(&p, 10.0);
        assert_eq!(r.dh1_at_0, 0.0);
        assert_eq!(r.cterm_at_0, 0.0);
        assert!(!r.ok);
    }
}
