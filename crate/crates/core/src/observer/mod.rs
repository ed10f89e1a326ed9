//! Seven-state observer estimating `(rho, beta, alpha)` and the infected
//! population online from the measured outputs.
//!
//! The observer is made of two blocks driven by the same measurements:
//!
//! * `(z1, z2, delta, rho)` works on the log-outputs `z_i = log y_i`, whose
//!   early-epidemic dynamics are `z1' = delta - rho`, `z2' = exp(z1 - z2) - rho`
//!   with `delta = beta - alpha`. Its error matrix `M1` has spectrum `{-lambda_i}`.
//! * `(y1, v, k)` tracks `v = beta S/N - rho - alpha` and `k = beta^2 / alpha`
//!   under `y1' = v y1`, `v' = -k y1 / N`. Its error obeys `e' = y1(t) M2 e` and
//!   `M2` has spectrum `{-mu_j}`.
//!
//! `beta` and `alpha` are recovered from `(k, delta)` as the smaller root of
//! `beta^2 - k beta + k delta = 0`.

mod analysis;
mod gains;

pub use analysis::{
    assemble_m1, assemble_m2, char_poly, check_gain_set, verify_pole_placement, PolePlacementReport,
    PLACEMENT_TOLERANCE,
};
pub use gains::{elementary_symmetric, gains, sigma, GainSet};

use crate::error::{Error, Result};
use crate::integrator::{integrate, integrate_driven, IntegratorConfig, SampledInput, Trajectory};
use crate::observation::OutputSeries;

/// Below this `alpha_hat`, `I_hat = y1 / alpha_hat` is reported as missing.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    pub z1_hat: f64,
    pub z2_hat: f64,
    pub delta_hat: f64,
    pub rho_hat: f64,
    pub y1_hat: f64,
    pub v_hat: f64,
    pub k_hat: f64,
}

impl ObserverState {
    pub fn to_array(self) -> [f64; 7] {
        [
            self.z1_hat,
            self.z2_hat,
            self.delta_hat,
            self.rho_hat,
            self.y1_hat,
            self.v_hat,
            self.k_hat,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            z1_hat: a[0],
            z2_hat: a[1],
            delta_hat: a[2],
            rho_hat: a[3],
            y1_hat: a[4],
            v_hat: a[5],
            k_hat: a[6],
        }
    }

    /// Measured components start at zero innovation; the rest come from `guess`.
    pub fn from_measurements(y1: f64, y2: f64, guess: &InitialGuess) -> Result<Self> {
        if !(y1 > 0.0 && y2 > 0.0) {
            return Err(Error::MeasurementGuard(format!(
                "initial measurements must be positive, got y1 = {y1}, y2 = {y2}"
            )));
        }
        Ok(Self {
            z1_hat: y1.ln(),
            z2_hat: y2.ln(),
            delta_hat: guess.delta0,
            rho_hat: guess.rho0,
            y1_hat: y1,
            v_hat: guess.v0,
            k_hat: guess.k0,
        })
    }
}

/// Initial guesses for the unmeasured observer states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGuess {
    pub delta0: f64,
    pub rho0: f64,
    pub v0: f64,
    pub k0: f64,
}

impl Default for InitialGuess {
    fn default() -> Self {
        Self {
            delta0: 0.2,
            rho0: 0.05,
            v0: 0.1,
            k0: 1.0,
        }
    }
}

/// Observer vector field driven by the measurements `y1`, `y2`.
pub fn observer_rhs(x: &ObserverState, y1: f64, y2: f64, g: &GainSet, population: f64) -> Result<ObserverState> {
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(Error::MeasurementGuard(format!(
            "measurements must be positive, got y1 = {y1}, y2 = {y2}"
        )));
    }
    let k = &g.k;
    let innov_z1 = x.z1_hat - y1.ln();
    let innov_z2 = x.z2_hat - y2.ln();
    let innov_y1 = x.y1_hat - y1;
    Ok(ObserverState {
        z1_hat: x.delta_hat - x.rho_hat - k[0] * innov_z1,
        z2_hat: y1 / y2 - x.rho_hat - k[1] * innov_z1,
        delta_hat: -k[2] * innov_z1,
        rho_hat: -k[3] * innov_z1 - innov_z2,
        y1_hat: x.v_hat * y1 - k[4] * y1 * innov_y1,
        v_hat: -x.k_hat * y1 / population - k[5] * y1 * innov_y1,
        k_hat: -k[6] * population * y1 * innov_y1,
    })
}

/// Parameter estimates read off one observer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub rho_hat: f64,
    pub beta_hat: f64,
    pub alpha_hat: f64,
    /// The discriminant `k^2 - 4 delta k` was negative and clamped to zero.
    pub clamp_active: bool,
    /// `k_hat <= 0` or `alpha_hat <= 0`: no epidemic parameters match.
    pub non_physical: bool,
}

/// `beta_hat = (k - sqrt(max(k^2 - 4 delta k, 0))) / 2`, `alpha_hat = beta_hat - delta_hat`.
pub fn estimate(x: &ObserverState) -> Estimate {
    let (k, delta) = (x.k_hat, x.delta_hat);
    let disc = k * k - 4.0 * delta * k;
    let clamp_active = disc < 0.0;
    let root = disc.max(0.0).sqrt();
    // For k > 0 the smaller root equals 2 k delta / (k + root), which avoids
    // cancellation when k is much larger than beta.
    let beta_hat = if k > 0.0 && !clamp_active {
        2.0 * k * delta / (k + root)
    } else {
        0.5 * (k - root)
    };
    let alpha_hat = beta_hat - delta;
    Estimate {
        rho_hat: x.rho_hat,
        beta_hat,
        alpha_hat,
        clamp_active,
        non_physical: k <= 0.0 || alpha_hat <= 0.0,
    }
}

/// Estimates aligned with the measurement grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateSeries {
    pub times: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub beta_hat: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub k_hat: Vec<f64>,
    /// `y1 / alpha_hat`, missing while `alpha_hat <= ALPHA_FLOOR`.
    pub i_hat: Vec<Option<f64>>,
    pub clamp_active: Vec<bool>,
    pub non_physical: Vec<bool>,
}

/// Number of samples replaced by the measurement guard, per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GuardReport {
    pub y1_substitutions: usize,
    pub y2_substitutions: usize,
}

fn guard_channel(values: &[f64], name: &str) -> Result<(Vec<f64>, usize)> {
    let fallback = values
        .iter()
        .copied()
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !fallback.is_finite() {
        return Err(Error::MeasurementGuard(format!("{name} has no positive sample")));
    }
    let mut last = None;
    let mut substitutions = 0;
    let out = values
        .iter()
        .map(|&v| {
            if v > 0.0 && v.is_finite() {
                last = Some(v);
                v
            } else {
                substitutions += 1;
                last.unwrap_or(fallback)
            }
        })
        .collect();
    Ok((out, substitutions))
}

/// Replaces non-positive samples by the last positive one (or, before the
/// first positive sample, by the smallest positive value in the series).
pub fn guard_measurements(series: &OutputSeries) -> Result<(OutputSeries, GuardReport)> {
    let (y1, n1) = guard_channel(&series.y1, "y1")?;
    let (y2, n2) = guard_channel(&series.y2, "y2")?;
    Ok((
        OutputSeries {
            times: series.times.clone(),
            y1,
            y2,
        },
        GuardReport {
            y1_substitutions: n1,
            y2_substitutions: n2,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRun {
    pub trajectory: Trajectory<7>,
    pub estimates: EstimateSeries,
    pub guard: GuardReport,
}

impl ObserverRun {
    pub fn final_estimate(&self) -> Estimate {
        let (_, x) = self.trajectory.last().expect("trajectory is never empty");
        estimate(&ObserverState::from_array(*x))
    }
}

fn divergence_time(err: &Error) -> Option<f64> {
    match err.root() {
        Error::Divergence { time } => Some(*time),
        _ => None,
    }
}

/// Runs the observer over `measurements`, which must be sampled on `cfg`'s grid.
pub fn run_observer(
    measurements: &OutputSeries,
    g: &GainSet,
    population: f64,
    init: &ObserverState,
    cfg: &IntegratorConfig,
) -> Result<ObserverRun> {
    if measurements.len() != cfg.steps() + 1 {
        return Err(Error::InvalidArgument(format!(
            "measurements have {} samples, integration grid has {}",
            measurements.len(),
            cfg.steps() + 1
        )));
    }
    let (guarded, guard) = guard_measurements(measurements)?;
    let inputs = SampledInput::new(
        0.0,
        cfg.dt(),
        guarded.y1.iter().zip(&guarded.y2).map(|(a, b)| [*a, *b]).collect(),
    )?;

    let trajectory = integrate_driven(
        |x: &[f64; 7], u: &[f64; 2], t| {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { time: t });
            }
            observer_rhs(&ObserverState::from_array(*x), u[0], u[1], g, population).map(ObserverState::to_array)
        },
        init.to_array(),
        &inputs,
        cfg,
    )
    .map_err(|e| match divergence_time(&e) {
        Some(time) => Error::Divergence { time },
        None => e,
    })?;
    if let Some((t, _)) = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .find(|(_, x)| x.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Divergence { time: *t });
    }

    let mut est = EstimateSeries {
        times: trajectory.times.clone(),
        ..Default::default()
    };
    for (x, y1) in trajectory.states.iter().zip(&guarded.y1) {
        let state = ObserverState::from_array(*x);
        let e = estimate(&state);
        est.rho_hat.push(e.rho_hat);
        est.beta_hat.push(e.beta_hat);
        est.alpha_hat.push(e.alpha_hat);
        est.delta_hat.push(state.delta_hat);
        est.k_hat.push(state.k_hat);
        est.i_hat.push((e.alpha_hat > ALPHA_FLOOR).then(|| y1 / e.alpha_hat));
        est.clamp_active.push(e.clamp_active);
        est.non_physical.push(e.non_physical);
    }

    Ok(ObserverRun {
        trajectory,
        estimates: est,
        guard,
    })
}

/// Outputs generated by the approximate dynamics the second block is built
/// on: `y1' = v y1`, `v' = -k y1 / N`, together with `y2' = y1 - rho y2`.
///
/// Returns the outputs and the true `v` along the grid.
pub fn reduced_model_outputs(
    y1_0: f64,
    v0: f64,
    k: f64,
    rho: f64,
    y2_0: f64,
    population: f64,
    cfg: &IntegratorConfig,
) -> Result<(OutputSeries, Vec<f64>)> {
    let traj = integrate(
        |x: &[f64; 3]| Ok([x[1] * x[0], -k * x[0] / population, x[0] - rho * x[2]]),
        [y1_0, v0, y2_0],
        cfg,
    )?;
    Ok((
        OutputSeries {
            times: traj.times.clone(),
            y1: traj.component(0),
            y2: traj.component(2),
        },
        traj.component(1),
    ))
}

/// Trapezoidal integral of a uniformly sampled series.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}
