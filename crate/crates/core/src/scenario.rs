//! Scenario documents and the end-to-end pipelines built on them.
//!
//! A scenario is a flat `key = value` document, one key per line, with `#`
//! comments. Missing keys take the defaults of the reference experiment
//! (N = 1e5, alpha = 0.07, beta = 0.4, rho = 0.1, I0 = 10, Q0 = 5, 10 days).

use std::collections::HashSet;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, Trajectory};
use crate::model::{simulate, EpidemicState, ModelKind, ModelParams};
use crate::observation::{add_noise, moving_average_sparse, observe, NoiseSpec, OutputSeries};
use crate::observer::{gains, guard_measurements, run_observer, GainSet, InitialGuess, ObserverRun, ObserverState};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub i0: f64,
    pub q0: f64,
    pub r0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub lambda: [f64; 4],
    pub mu: [f64; 3],
    pub noise: NoiseSpec,
    pub smooth_window: usize,
    pub guess: InitialGuess,
    pub out_dir: PathBuf,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            kind: ModelKind::Full,
            params: ModelParams {
                beta: 0.4,
                rho: 0.1,
                alpha: 0.07,
                population: 1e5,
            },
            i0: 10.0,
            q0: 5.0,
            r0: 0.0,
            dt: 0.01,
            horizon: 10.0,
            lambda: [1.0, 1.5, 2.0, 2.5],
            mu: [1.0 / 13000.0, 1.0 / 15000.0, 1.0 / 19000.0],
            noise: NoiseSpec {
                relative_sigma: 0.05,
                seed: 0,
            },
            smooth_window: 101,
            guess: InitialGuess::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "model.kind",
    "params.beta",
    "params.rho",
    "params.alpha",
    "params.N",
    "init.I0",
    "init.Q0",
    "init.R0",
    "sim.dt",
    "sim.horizon",
    "poles.lambda",
    "poles.mu",
    "noise.relative_sigma",
    "noise.seed",
    "smooth.window",
    "observer.delta0",
    "observer.rho0",
    "observer.v0",
    "observer.k0",
    "out.dir",
];

/// Parses a number, also accepting a simple ratio such as `1/13000`.
fn parse_number(key: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    let value = match raw.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| Error::config(key, format!("`{raw}` is not a number")))?;
            let den: f64 = den.trim().parse().map_err(|_| Error::config(key, format!("`{raw}` is not a number")))?;
            num / den
        }
        None => raw
            .parse()
            .map_err(|_| Error::config(key, format!("`{raw}` is not a number")))?,
    };
    if !value.is_finite() {
        return Err(Error::config(key, format!("`{raw}` is not finite")));
    }
    Ok(value)
}

fn parse_list<const L: usize>(key: &str, raw: &str) -> Result<[f64; L]> {
    let values = raw
        .split(',')
        .map(|item| parse_number(key, item))
        .collect::<Result<Vec<_>>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| Error::config(key, format!("expected {L} values, got {}", v.len())))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be >= 0, got {v}")))
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        let mut seen = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            match key {
                "model.kind" => sc.kind = value.parse().map_err(|m: String| Error::config(key, m))?,
                "params.beta" => sc.params.beta = positive(key, parse_number(key, value)?)?,
                "params.rho" => sc.params.rho = positive(key, parse_number(key, value)?)?,
                "params.alpha" => sc.params.alpha = positive(key, parse_number(key, value)?)?,
                "params.N" => sc.params.population = positive(key, parse_number(key, value)?)?,
                "init.I0" => sc.i0 = positive(key, parse_number(key, value)?)?,
                "init.Q0" => sc.q0 = non_negative(key, parse_number(key, value)?)?,
                "init.R0" => sc.r0 = non_negative(key, parse_number(key, value)?)?,
                "sim.dt" => sc.dt = positive(key, parse_number(key, value)?)?,
                "sim.horizon" => sc.horizon = positive(key, parse_number(key, value)?)?,
                "poles.lambda" => {
                    sc.lambda = parse_list(key, value)?;
                    for v in sc.lambda {
                        positive(key, v)?;
                    }
                }
                "poles.mu" => {
                    sc.mu = parse_list(key, value)?;
                    for v in sc.mu {
                        positive(key, v)?;
                    }
                }
                "noise.relative_sigma" => sc.noise.relative_sigma = non_negative(key, parse_number(key, value)?)?,
                "noise.seed" => {
                    sc.noise.seed = value
                        .parse()
                        .map_err(|_| Error::config(key, format!("`{value}` is not an unsigned integer")))?
                }
                "smooth.window" => {
                    let w: usize = value
                        .parse()
                        .map_err(|_| Error::config(key, format!("`{value}` is not an unsigned integer")))?;
                    if w == 0 || w.is_multiple_of(2) {
                        return Err(Error::config(key, format!("must be odd and >= 1, got {w}")));
                    }
                    sc.smooth_window = w;
                }
                "observer.delta0" => sc.guess.delta0 = parse_number(key, value)?,
                "observer.rho0" => sc.guess.rho0 = parse_number(key, value)?,
                "observer.v0" => sc.guess.v0 = parse_number(key, value)?,
                "observer.k0" => sc.guess.k0 = parse_number(key, value)?,
                "out.dir" => {
                    if value.is_empty() {
                        return Err(Error::config(key, "must not be empty"));
                    }
                    sc.out_dir = PathBuf::from(value);
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<()> {
        if self.i0 + self.q0 + self.r0 >= self.params.population {
            return Err(Error::config(
                "init.I0",
                "I0 + Q0 + R0 must be smaller than params.N",
            ));
        }
        if self.horizon < self.dt {
            return Err(Error::config("sim.horizon", "must be >= sim.dt"));
        }
        if !((self.horizon / self.dt).round() >= self.smooth_window as f64) {
            return Err(Error::config("smooth.window", "longer than the simulated series"));
        }
        Ok(())
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        IntegratorConfig::new(self.dt, self.horizon)
    }

    pub fn initial_state(&self) -> EpidemicState {
        EpidemicState::initial(self.params.population, self.i0, self.q0, self.r0)
    }

    pub fn gains(&self) -> Result<GainSet> {
        gains(self.lambda, self.mu)
    }

    /// Same scenario with measurement noise switched off.
    pub fn without_noise(mut self) -> Self {
        self.noise.relative_sigma = 0.0;
        self
    }

    pub fn simulate(&self) -> Result<Trajectory<4>> {
        simulate(self.kind, &self.params, &self.initial_state(), &self.integrator()?)
    }

    /// Clean and noisy outputs for a simulated trajectory.
    pub fn measurements(&self, truth: &Trajectory<4>) -> Result<(OutputSeries, OutputSeries)> {
        let clean = observe(truth, self.params.alpha);
        let noisy = add_noise(&clean, &self.noise)?;
        Ok((clean, noisy))
    }

    /// Simulate, measure, and run the observer.
    pub fn estimate(&self) -> Result<Estimation> {
        let cfg = self.integrator()?;
        let truth = self.simulate()?;
        let (clean, noisy) = self.measurements(&truth)?;
        let g = self.gains()?;
        let (guarded, _) = guard_measurements(&noisy)?;
        let init = ObserverState::from_measurements(guarded.y1[0], guarded.y2[0], &self.guess)?;
        let run = run_observer(&noisy, &g, self.params.population, &init, &cfg)?;
        let i_hat_smoothed = moving_average_sparse(&run.estimates.i_hat, self.smooth_window)?;
        Ok(Estimation {
            truth,
            clean,
            noisy,
            gains: g,
            run,
            i_hat_smoothed,
        })
    }
}

/// Everything produced by one estimation pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub truth: Trajectory<4>,
    pub clean: OutputSeries,
    pub noisy: OutputSeries,
    pub gains: GainSet,
    pub run: ObserverRun,
    pub i_hat_smoothed: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationSummary {
    pub rho_hat: f64,
    pub beta_hat: f64,
    pub alpha_hat: f64,
    pub rho_rel_error: f64,
    pub beta_rel_error: f64,
    pub alpha_rel_error: f64,
    pub y1_substitutions: usize,
    pub y2_substitutions: usize,
    pub clamp_samples: usize,
    pub decay_bound: f64,
}

impl Estimation {
    pub fn summary(&self, params: &ModelParams) -> EstimationSummary {
        let fin = self.run.final_estimate();
        let rel = |got: f64, want: f64| ((got - want) / want).abs();
        EstimationSummary {
            rho_hat: fin.rho_hat,
            beta_hat: fin.beta_hat,
            alpha_hat: fin.alpha_hat,
            rho_rel_error: rel(fin.rho_hat, params.rho),
            beta_rel_error: rel(fin.beta_hat, params.beta),
            alpha_rel_error: rel(fin.alpha_hat, params.alpha),
            y1_substitutions: self.run.guard.y1_substitutions,
            y2_substitutions: self.run.guard.y2_substitutions,
            clamp_samples: self.run.estimates.clamp_active.iter().filter(|c| **c).count(),
            decay_bound: self.gains.decay_bound,
        }
    }
}

impl std::fmt::Display for EstimationSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "final estimates:")?;
        writeln!(f, "  rho_hat   = {:.6}  (relative error {:.3e})", self.rho_hat, self.rho_rel_error)?;
        writeln!(f, "  beta_hat  = {:.6}  (relative error {:.3e})", self.beta_hat, self.beta_rel_error)?;
        writeln!(f, "  alpha_hat = {:.6}  (relative error {:.3e})", self.alpha_hat, self.alpha_rel_error)?;
        writeln!(
            f,
            "measurement guard substitutions: y1 = {}, y2 = {}",
            self.y1_substitutions, self.y2_substitutions
        )?;
        writeln!(f, "samples with clamped discriminant: {}", self.clamp_samples)?;
        write!(f, "decay bound l = {:e}", self.decay_bound)
    }
}
