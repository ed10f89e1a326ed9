//! Measured outputs `y1 = alpha * I` (flow into quarantine) and `y2 = Q`
//! (quarantine size), their analytic time derivatives, measurement noise and
//! smoothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, Trajectory};
use crate::model::{incidence_denominator, EpidemicState, ModelKind, ModelParams};

/// Output samples aligned with the generating trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSeries {
    pub times: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl OutputSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn observe(traj: &Trajectory<4>, alpha: f64) -> OutputSeries {
    OutputSeries {
        times: traj.times.clone(),
        y1: traj.states.iter().map(|x| alpha * x[1]).collect(),
        y2: traj.states.iter().map(|x| x[2]).collect(),
    }
}

/// Outputs and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputJet {
    pub t: f64,
    pub y1: f64,
    pub dy1: f64,
    pub d2y1: f64,
    pub d3y1: f64,
    pub y2: f64,
    pub dy2: f64,
    pub d2y2: f64,
}

impl OutputJet {
    pub fn at(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
}

// Taylor coefficients up to this order are propagated through the vector field.
const JET_ORDER: usize = 3;

/// Exact output derivatives at `state`, obtained by propagating truncated
/// Taylor series of `(S, I, Q)` through the model's vector field.
///
/// The returned jet has `t = 0`; use [`OutputJet::at`] to stamp a time.
pub fn output_jets(state: &EpidemicState, params: &ModelParams, kind: ModelKind) -> Result<OutputJet> {
    let d0 = incidence_denominator(kind, state.q, params.population)?;
    let full = matches!(kind, ModelKind::Full);
    let (beta, rho, alpha) = (params.beta, params.rho, params.alpha);

    let mut s = [0.0; JET_ORDER + 1];
    let mut i = [0.0; JET_ORDER + 1];
    let mut q = [0.0; JET_ORDER + 1];
    // incidence ratio S*I/denominator
    let mut g = [0.0; JET_ORDER + 1];
    s[0] = state.s;
    i[0] = state.i;
    q[0] = state.q;

    for k in 0..JET_ORDER {
        let si: f64 = (0..=k).map(|j| s[j] * i[k - j]).sum();
        // denominator series is (d0, -q1, -q2, ...) for the full model, constant otherwise
        let carry: f64 = if full {
            (1..=k).map(|j| -q[j] * g[k - j]).sum()
        } else {
            0.0
        };
        g[k] = (si - carry) / d0;

        let m = (k + 1) as f64;
        s[k + 1] = -beta * g[k] / m;
        i[k + 1] = (beta * g[k] - (rho + alpha) * i[k]) / m;
        q[k + 1] = (alpha * i[k] - rho * q[k]) / m;
    }

    Ok(OutputJet {
        t: 0.0,
        y1: alpha * i[0],
        dy1: alpha * i[1],
        d2y1: alpha * 2.0 * i[2],
        d3y1: alpha * 6.0 * i[3],
        y2: q[0],
        dy2: q[1],
        d2y2: 2.0 * q[2],
    })
}

/// Multiplicative Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the relative perturbation.
    pub relative_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            relative_sigma: 0.05,
            seed: 0,
        }
    }
}

/// Replaces every sample `y` by `max(y * (1 + eta), 0)` with `eta ~ N(0, sigma^2)` i.i.d.
///
/// Draws alternate `y1`, `y2` sample by sample from one ChaCha8 stream seeded by `spec.seed`.
pub fn add_noise(series: &OutputSeries, spec: &NoiseSpec) -> Result<OutputSeries> {
    if !(spec.relative_sigma.is_finite() && spec.relative_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relative_sigma must be >= 0, got {}",
            spec.relative_sigma
        )));
    }
    if spec.relative_sigma == 0.0 {
        return Ok(series.clone());
    }
    let normal = Normal::new(0.0, spec.relative_sigma)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut y1 = Vec::with_capacity(series.len());
    let mut y2 = Vec::with_capacity(series.len());
    for (&a, &b) in series.y1.iter().zip(&series.y2) {
        let e1: f64 = normal.sample(&mut rng);
        let e2: f64 = normal.sample(&mut rng);
        y1.push((a * (1.0 + e1)).max(0.0));
        y2.push((b * (1.0 + e2)).max(0.0));
    }
    Ok(OutputSeries {
        times: series.times.clone(),
        y1,
        y2,
    })
}

fn check_window(window: usize, len: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "moving-average window must be odd and >= 1, got {window}"
        )));
    }
    if len < window {
        return Err(Error::InvalidArgument(format!(
            "series of length {len} is shorter than the window {window}"
        )));
    }
    Ok(())
}

/// Centered moving average. Near the ends the window is truncated to the
/// samples that exist, so `[0, 1, 2, 3, 4]` with window 3 gives
/// `[0.5, 1, 2, 3, 3.5]`.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window, values.len())?;
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi + 1 - lo) as f64
        })
        .collect())
}

/// Moving average over a series with gaps: each output averages the present
/// samples inside the (truncated) window and is missing only when none are.
pub fn moving_average_sparse(values: &[Option<f64>], window: usize) -> Result<Vec<Option<f64>>> {
    check_window(window, values.len())?;
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (sum, count) = values[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            (count > 0).then(|| sum / count as f64)
        })
        .collect())
}

/// Outputs that follow the early-epidemic linear dynamics exactly:
/// `dy1/dt = (delta - rho) y1`, `dy2/dt = y1 - rho y2` with `delta = beta - alpha`.
pub fn linear_regime_outputs(params: &ModelParams, y1_0: f64, y2_0: f64, cfg: &IntegratorConfig) -> OutputSeries {
    let delta = params.delta();
    let growth = delta - params.rho;
    let forced = y1_0 / delta;
    let times = cfg.grid();
    let y1 = times.iter().map(|&t| y1_0 * (growth * t).exp()).collect();
    let y2 = times
        .iter()
        .map(|&t| (y2_0 - forced) * (-params.rho * t).exp() + forced * (growth * t).exp())
        .collect();
    OutputSeries { times, y1, y2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;

    fn reference_params() -> ModelParams {
        ModelParams::new(0.4, 0.1, 0.07, 1e5).unwrap()
    }

    fn reference_start() -> EpidemicState {
        EpidemicState::initial(1e5, 10.0, 5.0, 0.0)
    }

    #[test]
    fn observe_projects_outputs() {
        let cfg = IntegratorConfig::new(0.01, 1.0).unwrap();
        let traj = simulate(ModelKind::Full, &reference_params(), &reference_start(), &cfg).unwrap();
        let out = observe(&traj, 0.07);
        assert!((out.y1[0] - 0.7).abs() < 1e-15);
        assert_eq!(out.y2[0], 5.0);
        assert_eq!(out.y2, traj.component(2));
        assert_eq!(out.times, traj.times);
    }

    #[test]
    fn observe_without_infected_is_zero_flow() {
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![[10.0, 0.0, 1.0, 0.0], [10.0, 0.0, 0.9, 0.1]],
            dt: 1.0,
        };
        assert_eq!(observe(&traj, 0.3).y1, vec![0.0, 0.0]);
    }

    #[test]
    fn jet_at_experiment_start() {
        let jet = output_jets(&reference_start(), &reference_params(), ModelKind::Full).unwrap();
        assert!((jet.dy2 - 0.2).abs() < 1e-14);
        assert!(((jet.y1 - jet.dy2) / jet.y2 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn jet_rejects_full_quarantine() {
        let st = EpidemicState::new(0.0, 0.0, 1e5, 0.0);
        assert!(output_jets(&st, &reference_params(), ModelKind::Full).is_err());
    }

    /// Closed-form derivatives of the simplified model, written out by hand.
    #[test]
    fn jet_matches_hand_derivation_for_simplified_model() {
        let p = reference_params();
        let st = EpidemicState::new(90000.0, 3000.0, 800.0, 6200.0);
        let jet = output_jets(&st, &p, ModelKind::Simplified).unwrap();
        let (b, r, a, n) = (p.beta, p.rho, p.alpha, p.population);
        let (s, i) = (st.s, st.i);
        let growth = b * s / n - r - a;
        let di = growth * i;
        let ds = -b * s * i / n;
        let dgrowth = b * ds / n;
        let d2i = dgrowth * i + growth * di;
        let d2s = -b * (ds * i + s * di) / n;
        let d2growth = b * d2s / n;
        let d3i = d2growth * i + 2.0 * dgrowth * di + growth * d2i;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(jet.dy1, a * di) < 1e-13);
        assert!(rel(jet.d2y1, a * d2i) < 1e-12);
        assert!(rel(jet.d3y1, a * d3i) < 1e-11);
    }

    #[test]
    fn third_derivative_matches_finite_differences() {
        // Stencil spacing of 10 samples keeps round-off well below the tolerance.
        let p = reference_params();
        let cfg = IntegratorConfig::new(1e-3, 6.0).unwrap();
        for kind in [ModelKind::Full, ModelKind::Simplified] {
            let traj = simulate(kind, &p, &reference_start(), &cfg).unwrap();
            let y1 = observe(&traj, p.alpha).y1;
            let stride = 10;
            let h = stride as f64 * cfg.dt();
            for &centre in &[1000usize, 2500, 4000] {
                let f = |o: isize| y1[(centre as isize + o * stride as isize) as usize];
                let fd = (f(-3) / 8.0 - f(-2) + 13.0 / 8.0 * f(-1) - 13.0 / 8.0 * f(1) + f(2) - f(3) / 8.0)
                    / h.powi(3);
                let st = EpidemicState::from_array(traj.states[centre]);
                let jet = output_jets(&st, &p, kind).unwrap();
                let rel = (jet.d3y1 - fd).abs() / jet.d3y1.abs();
                assert!(rel < 1e-4, "{kind} t={} rel={rel}", traj.times[centre]);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = OutputSeries {
            times: vec![0.0, 1.0],
            y1: vec![1.0, 2.0],
            y2: vec![3.0, 4.0],
        };
        let spec = NoiseSpec {
            relative_sigma: 0.0,
            seed: 9,
        };
        assert_eq!(add_noise(&s, &spec).unwrap(), s);
    }

    #[test]
    fn noise_is_reproducible_and_seed_dependent() {
        let s = OutputSeries {
            times: (0..50).map(|k| k as f64).collect(),
            y1: vec![10.0; 50],
            y2: vec![20.0; 50],
        };
        let spec = NoiseSpec {
            relative_sigma: 0.05,
            seed: 42,
        };
        let a = add_noise(&s, &spec).unwrap();
        assert_eq!(a, add_noise(&s, &spec).unwrap());
        let b = add_noise(&s, &NoiseSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn noise_has_requested_spread() {
        let n = 10_000;
        let s = OutputSeries {
            times: (0..n).map(|k| k as f64).collect(),
            y1: vec![100.0; n],
            y2: vec![100.0; n],
        };
        let noisy = add_noise(&s, &NoiseSpec { relative_sigma: 0.05, seed: 7 }).unwrap();
        for ch in [&noisy.y1, &noisy.y2] {
            let mean = ch.iter().sum::<f64>() / n as f64;
            let var = ch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            assert!((4.8..=5.2).contains(&sd), "sd {sd}");
            assert!((mean - 100.0).abs() < 0.2);
        }
    }

    #[test]
    fn noise_never_goes_negative() {
        let s = OutputSeries {
            times: vec![0.0; 2000],
            y1: vec![1.0; 2000],
            y2: vec![1.0; 2000],
        };
        let noisy = add_noise(&s, &NoiseSpec { relative_sigma: 1.0, seed: 1 }).unwrap();
        assert!(noisy.y1.iter().chain(&noisy.y2).all(|&v| v >= 0.0));
        assert!(noisy.y1.contains(&0.0));
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(
            moving_average(&[0.0, 1.0, 2.0, 3.0, 4.0], 3).unwrap(),
            vec![0.5, 1.0, 2.0, 3.0, 3.5]
        );
        let xs = [3.0, -1.0, 7.5, 2.0];
        assert_eq!(moving_average(&xs, 1).unwrap(), xs.to_vec());
        let c = moving_average(&[4.25; 200], 101).unwrap();
        assert!(c.iter().all(|&v| (v - 4.25).abs() < 1e-14));
        assert!(moving_average(&xs, 2).is_err());
        assert!(moving_average(&xs, 5).is_err());
    }

    #[test]
    fn sparse_moving_average_skips_gaps() {
        let v = [None, Some(2.0), None, Some(4.0), None];
        assert_eq!(
            moving_average_sparse(&v, 3).unwrap(),
            vec![Some(2.0), Some(2.0), Some(3.0), Some(4.0), Some(4.0)]
        );
        assert_eq!(moving_average_sparse(&[None, None, None], 1).unwrap(), vec![None; 3]);
    }

    #[test]
    fn linear_outputs_satisfy_their_dynamics() {
        let p = reference_params();
        let cfg = IntegratorConfig::new(0.01, 10.0).unwrap();
        let out = linear_regime_outputs(&p, 0.7, 5.0, &cfg);
        assert_eq!(out.y2[0], 5.0);
        // central differences against dy2 = y1 - rho y2
        for k in 1..out.len() - 1 {
            let dy2 = (out.y2[k + 1] - out.y2[k - 1]) / (2.0 * cfg.dt());
            let expected = out.y1[k] - p.rho * out.y2[k];
            assert!((dy2 - expected).abs() < 1e-4 * expected.abs().max(1.0));
        }
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::model::simulate;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jets_obey_quarantine_dynamics(
            beta in 0.2..1.0f64, rho in 0.02..0.3f64, alpha in 0.02..0.3f64,
            i0 in 1.0..500.0f64, q0 in 0.0..100.0f64, t_idx in 1usize..400,
            full in any::<bool>(),
        ) {
            let p = ModelParams::new(beta, rho, alpha, 1e5).unwrap();
            let kind = if full { ModelKind::Full } else { ModelKind::Simplified };
            let cfg = IntegratorConfig::new(0.01, 4.0).unwrap();
            let traj = simulate(kind, &p, &EpidemicState::initial(1e5, i0, q0, 0.0), &cfg).unwrap();
            let jet = output_jets(&EpidemicState::from_array(traj.states[t_idx]), &p, kind).unwrap();
            let scale1 = jet.y1.abs() + (rho * jet.y2).abs();
            let scale2 = jet.dy1.abs() + (rho * jet.dy2).abs();
            prop_assert!((jet.dy2 - (jet.y1 - rho * jet.y2)).abs() <= 1e-10 * scale1);
            prop_assert!((jet.d2y2 - (jet.dy1 - rho * jet.dy2)).abs() <= 1e-10 * scale2);
        }
    }
}
