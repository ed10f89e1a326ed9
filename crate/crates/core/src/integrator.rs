//! Fixed-step classical Runge-Kutta (RK4) integration.
//!
//! Two entry points: [`integrate`] for autonomous vector fields and
//! [`integrate_driven`] for vector fields that also read exogenous, sampled
//! inputs (the observer is driven by the measured outputs). Inputs are
//! interpolated linearly at the RK4 stage times.

use crate::error::{Error, Result};

/// Step size and horizon, both in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    dt: f64,
    horizon: f64,
    steps: usize,
}

impl IntegratorConfig {
    /// The horizon is rounded to a whole number of steps; `dt` is then
    /// adjusted so that the last grid point lands exactly on the horizon.
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if !(horizon.is_finite() && horizon >= dt) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be >= dt, got horizon = {horizon}, dt = {dt}"
            )));
        }
        let steps = (horizon / dt).round().max(1.0) as usize;
        let horizon = steps as f64 * dt;
        Ok(Self {
            dt: horizon / steps as f64,
            horizon,
            steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Time of grid point `n`; exact at both ends.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.dt
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }
}

/// Solution samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub dt: f64,
}

impl<const D: usize> Trajectory<D> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64; D])> {
        self.times.last().copied().zip(self.states.last())
    }

    /// Values of one state component along the trajectory.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[idx]).collect()
    }
}

/// Uniformly sampled vector-valued input signal, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInput<const M: usize> {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<[f64; M]>,
}

impl<const M: usize> SampledInput<M> {
    pub fn new(t0: f64, dt: f64, values: Vec<[f64; M]>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("sample spacing must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("input series is empty".into()));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }

    /// Linear interpolation; clamps to the end samples outside the covered interval.
    pub fn at(&self, t: f64) -> [f64; M] {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let pos = ((t - self.t0) / self.dt).max(0.0);
        let idx = (pos.floor() as usize).min(n - 2);
        let frac = (pos - idx as f64).clamp(0.0, 1.0);
        let (a, b) = (&self.values[idx], &self.values[idx + 1]);
        std::array::from_fn(|k| a[k] + (b[k] - a[k]) * frac)
    }
}

#[inline]
fn axpy<const D: usize>(x: &[f64; D], h: f64, k: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|j| x[j] + h * k[j])
}

fn annotate<T>(t: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtTime {
        time: t,
        source: Box::new(e),
    })
}

/// Integrates `dx/dt = rhs(x)` from `x0` at t = 0 to the configured horizon.
pub fn integrate<const D: usize, F>(mut rhs: F, x0: [f64; D], cfg: &IntegratorConfig) -> Result<Trajectory<D>>
where
    F: FnMut(&[f64; D]) -> Result<[f64; D]>,
{
    integrate_driven(
        |x: &[f64; D], _: &[f64; 0], _t: f64| rhs(x),
        x0,
        &SampledInput {
            t0: 0.0,
            dt: cfg.horizon(),
            values: vec![[]; 2],
        },
        cfg,
    )
}

/// Integrates `dx/dt = rhs(x, u(t), t)` where `u` is read from `inputs`.
///
/// The input series must cover `[0, horizon]`.
pub fn integrate_driven<const D: usize, const M: usize, F>(
    mut rhs: F,
    x0: [f64; D],
    inputs: &SampledInput<M>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>>
where
    F: FnMut(&[f64; D], &[f64; M], f64) -> Result<[f64; D]>,
{
    let horizon = cfg.horizon();
    let slack = 1e-9 * horizon.max(1.0);
    if inputs.t0 > slack || inputs.t_end() < horizon - slack {
        return Err(Error::InputTooShort {
            covered: inputs.t_end(),
            horizon,
        });
    }

    let steps = cfg.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0);

    let mut x = x0;
    for n in 0..steps {
        let t = cfg.time(n);
        let t_next = cfg.time(n + 1);
        let h = t_next - t;
        let t_mid = t + 0.5 * h;
        let u0 = inputs.at(t);
        let u_mid = inputs.at(t_mid);
        let u1 = inputs.at(t_next);

        let k1 = annotate(t, rhs(&x, &u0, t))?;
        let k2 = annotate(t_mid, rhs(&axpy(&x, 0.5 * h, &k1), &u_mid, t_mid))?;
        let k3 = annotate(t_mid, rhs(&axpy(&x, 0.5 * h, &k2), &u_mid, t_mid))?;
        let k4 = annotate(t_next, rhs(&axpy(&x, h, &k3), &u1, t_next))?;
        x = std::array::from_fn(|j| x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));

        times.push(t_next);
        states.push(x);
    }

    Ok(Trajectory {
        times,
        states,
        dt: cfg.dt(),
    })
}
