//! SIQR compartmental model.
//!
//! Susceptible, infected, quarantined and recovered compartments with an
//! infectivity rate `beta`, a recovery rate `rho` shared by the infected and
//! quarantined populations, and a quarantine placement rate `alpha`.
//!
//! Two variants are provided. [`ModelKind::Full`] normalises the incidence by
//! the non-quarantined population `N - Q`; [`ModelKind::Simplified`] uses `N`,
//! which is accurate while `Q` stays small compared to `N`.

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelKind {
    #[default]
    Full,
    Simplified,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(ModelKind::Full),
            "simplified" => Ok(ModelKind::Simplified),
            other => Err(format!("unknown model kind `{other}` (expected full | simplified)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Full => f.write_str("full"),
            ModelKind::Simplified => f.write_str("simplified"),
        }
    }
}

/// Rates (1/day) and the known population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub population: f64,
}

impl ModelParams {
    /// Validated constructor: every field must be finite and strictly positive.
    pub fn new(beta: f64, rho: f64, alpha: f64, population: f64) -> Result<Self> {
        for (name, v) in [
            ("beta", beta),
            ("rho", rho),
            ("alpha", alpha),
            ("population", population),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            beta,
            rho,
            alpha,
            population,
        })
    }

    /// `beta - alpha`, the growth-rate offset tracked by the observer.
    pub fn delta(&self) -> f64 {
        self.beta - self.alpha
    }

    /// `beta^2 / alpha`.
    pub fn k(&self) -> f64 {
        self.beta * self.beta / self.alpha
    }
}

/// Compartment sizes at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
    pub q: f64,
    pub r: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64, q: f64, r: f64) -> Self {
        Self { s, i, q, r }
    }

    /// `S(0) = N - I0 - Q0 - R0`.
    pub fn initial(population: f64, i0: f64, q0: f64, r0: f64) -> Self {
        Self::new(population - i0 - q0 - r0, i0, q0, r0)
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.q + self.r
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.i, self.q, self.r]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// Incidence denominator: `N - Q` for the full model, `N` for the simplified one.
pub(crate) fn incidence_denominator(kind: ModelKind, q: f64, population: f64) -> Result<f64> {
    match kind {
        ModelKind::Full => {
            let d = population - q;
            if d > 0.0 {
                Ok(d)
            } else {
                Err(Error::Domain(format!(
                    "full model requires Q < N (Q = {q}, N = {population})"
                )))
            }
        }
        ModelKind::Simplified => Ok(population),
    }
}

/// Time derivative `(dS, dI, dQ, dR)` of the selected model.
pub fn rhs(kind: ModelKind, state: &EpidemicState, params: &ModelParams) -> Result<EpidemicState> {
    let denom = incidence_denominator(kind, state.q, params.population)?;
    let infection = params.beta * state.s * state.i / denom;
    Ok(EpidemicState {
        s: -infection,
        i: infection - (params.rho + params.alpha) * state.i,
        q: params.alpha * state.i - params.rho * state.q,
        r: params.rho * (state.i + state.q),
    })
}

/// Reproduction number `beta / (rho + alpha)`.
pub fn r0(params: &ModelParams) -> f64 {
    params.beta / (params.rho + params.alpha)
}

/// Integrates the selected model from `x0`; states are stored as `[S, I, Q, R]`.
pub fn simulate(
    kind: ModelKind,
    params: &ModelParams,
    x0: &EpidemicState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<4>> {
    integrate(
        |x: &[f64; 4]| rhs(kind, &EpidemicState::from_array(*x), params).map(EpidemicState::to_array),
        x0.to_array(),
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionReport {
    /// Reproduction number above one: the epidemic can spread.
    pub a1: bool,
    /// Quarantine placement no faster than recovery (`alpha <= rho`).
    pub a2: bool,
}

pub fn check_assumptions(params: &ModelParams) -> AssumptionReport {
    AssumptionReport {
        a1: r0(params) > 1.0,
        a2: params.alpha <= params.rho,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rhs_conserves_population(
            s in 0.0..1e6f64, i in 0.0..1e5f64, q in 0.0..1e5f64, r in 0.0..1e5f64,
            beta in 0.01..2.0f64, rho in 0.01..1.0f64, alpha in 0.01..1.0f64,
            full in any::<bool>(),
        ) {
            let st = EpidemicState::new(s, i, q, r);
            let p = ModelParams::new(beta, rho, alpha, st.total() + 1.0).unwrap();
            let kind = if full { ModelKind::Full } else { ModelKind::Simplified };
            let d = rhs(kind, &st, &p).unwrap();
            let scale = d.s.abs() + d.i.abs() + d.q.abs() + d.r.abs();
            prop_assert!(d.total().abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn susceptibles_decrease_while_infected(
            s in 1.0..1e6f64, i in 1e-3..1e5f64, q in 0.0..1e5f64,
            beta in 0.01..2.0f64, full in any::<bool>(),
        ) {
            let st = EpidemicState::new(s, i, q, 0.0);
            let p = ModelParams::new(beta, 0.1, 0.05, st.total()).unwrap();
            let kind = if full { ModelKind::Full } else { ModelKind::Simplified };
            prop_assert!(rhs(kind, &st, &p).unwrap().s < 0.0);
        }
    }
}
