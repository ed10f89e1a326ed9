//! The commands behind the `siqr` binary. Each writes its files into the
//! scenario's output directory and returns a printable report.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::identifiability::{check_initial_inequalities, quadratic_root, recover_full, recover_simplified, InitialInequalities, RecoveredParams};
use crate::integrator::IntegratorConfig;
use crate::model::{check_assumptions, r0, simulate, AssumptionReport, EpidemicState, ModelKind};
use crate::observation::{output_jets, OutputSeries};
use crate::observer::{check_gain_set, PolePlacementReport};
use crate::scenario::{EstimationSummary, Scenario};

pub const TRUTH_HEADER: &str = "t,S,I,Q,R";
pub const MEASUREMENTS_HEADER: &str = "t,y1,y2,y1_noisy,y2_noisy";
pub const ESTIMATES_HEADER: &str = "t,rho_hat,beta_hat,alpha_hat,I_hat,I_hat_smoothed,clamp_active";

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config { .. } => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `truth.csv`.
pub fn cmd_simulate(sc: &Scenario) -> Result<PathBuf> {
    let traj = sc.simulate()?;
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for (t, x) in traj.times.iter().zip(&traj.states) {
        writeln!(out, "{t},{},{},{},{}", x[0], x[1], x[2], x[3]).unwrap();
    }
    write_output(&sc.out_dir, "truth.csv", &out)
}

fn measurements_csv(clean: &OutputSeries, noisy: &OutputSeries) -> String {
    let mut out = String::from(MEASUREMENTS_HEADER);
    out.push('\n');
    for i in 0..clean.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            clean.times[i], clean.y1[i], clean.y2[i], noisy.y1[i], noisy.y2[i]
        )
        .unwrap();
    }
    out
}

/// Writes `measurements.csv`.
pub fn cmd_observe(sc: &Scenario) -> Result<PathBuf> {
    let truth = sc.simulate()?;
    let (clean, noisy) = sc.measurements(&truth)?;
    write_output(&sc.out_dir, "measurements.csv", &measurements_csv(&clean, &noisy))
}

/// Writes `estimates.csv` and `summary.txt`.
pub fn cmd_estimate(sc: &Scenario) -> Result<EstimationSummary> {
    let run = sc.estimate()?;
    let est = &run.run.estimates;
    let mut out = String::from(ESTIMATES_HEADER);
    out.push('\n');
    for i in 0..est.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            est.times[i],
            est.rho_hat[i],
            est.beta_hat[i],
            est.alpha_hat[i],
            opt(est.i_hat[i]),
            opt(run.i_hat_smoothed[i]),
            u8::from(est.clamp_active[i]),
        )
        .unwrap();
    }
    write_output(&sc.out_dir, "estimates.csv", &out)?;
    let summary = run.summary(&sc.params);
    write_output(&sc.out_dir, "summary.txt", &format!("{summary}\n"))?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyReport {
    pub kind: ModelKind,
    pub t: f64,
    pub recovered: RecoveredParams,
    /// Negative root of the quadratic in `Q'(0)`; full model only.
    pub root: Option<f64>,
    pub truth: RecoveredParams,
    pub max_rel_error: f64,
}

/// Recovers `(rho, alpha, beta, eps)` from the exact output jet at `t`.
///
/// Recovery assumes an epidemic started at `(N - eps, eps, 0, 0)`, so the
/// trajectory is generated from that state with `eps = I0`.
pub fn cmd_identify(sc: &Scenario, t: f64) -> Result<IdentifyReport> {
    if !(t > 0.0 && t <= sc.horizon) {
        return Err(Error::InvalidArgument(format!(
            "identification instant must lie in (0, {}], got {t}",
            sc.horizon
        )));
    }
    let p = &sc.params;
    let cfg = IntegratorConfig::new(sc.dt.min(t / 10.0), t)?;
    let traj = simulate(sc.kind, p, &EpidemicState::initial(p.population, sc.i0, 0.0, 0.0), &cfg)?;
    let (t_end, state) = traj.last().expect("trajectory is never empty");
    let jet = output_jets(&EpidemicState::from_array(*state), p, sc.kind)?.at(t_end);
    let y1_at_0 = p.alpha * sc.i0;
    let (recovered, root) = match sc.kind {
        ModelKind::Full => (
            recover_full(&jet, y1_at_0, p.population)?,
            Some(quadratic_root(&jet, p.population)?),
        ),
        ModelKind::Simplified => (recover_simplified(&jet, y1_at_0, p.population)?, None),
    };
    let truth = RecoveredParams {
        rho: p.rho,
        alpha: p.alpha,
        beta: p.beta,
        epsilon: sc.i0,
    };
    Ok(IdentifyReport {
        kind: sc.kind,
        t: t_end,
        recovered,
        root,
        truth,
        max_rel_error: recovered.max_rel_error(p.rho, p.alpha, p.beta, sc.i0),
    })
}

impl fmt::Display for IdentifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}, jet taken at t = {}", self.kind, self.t)?;
        let rows = [
            ("rho", self.recovered.rho, self.truth.rho),
            ("alpha", self.recovered.alpha, self.truth.alpha),
            ("beta", self.recovered.beta, self.truth.beta),
            ("epsilon", self.recovered.epsilon, self.truth.epsilon),
        ];
        for (name, got, want) in rows {
            writeln!(f, "  {name:<8} recovered = {got:.10}  true = {want}")?;
        }
        if let Some(x) = self.root {
            writeln!(f, "  selected root X = {x:e}")?;
        }
        write!(f, "max relative error: {:.3e}", self.max_rel_error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub r0: f64,
    pub assumptions: AssumptionReport,
    pub poles: PolePlacementReport,
    /// Evaluated at `eps = I0`.
    pub inequalities: InitialInequalities,
    pub gains: [f64; 7],
    pub decay_bound: f64,
}

pub fn cmd_check(sc: &Scenario) -> Result<CheckReport> {
    let g = sc.gains()?;
    Ok(CheckReport {
        r0: r0(&sc.params),
        assumptions: check_assumptions(&sc.params),
        poles: check_gain_set(&g, sc.params.population),
        inequalities: check_initial_inequalities(&sc.params, sc.i0),
        gains: g.k,
        decay_bound: g.decay_bound,
    })
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "R0 = {:.6}", self.r0)?;
        writeln!(f, "a1 (R0 > 1)         = {}", self.assumptions.a1)?;
        writeln!(f, "a2 (alpha <= rho)   = {}", self.assumptions.a2)?;
        writeln!(f, "m1_ok               = {}", self.poles.m1_ok)?;
        writeln!(f, "m2_ok               = {}", self.poles.m2_ok)?;
        writeln!(f, "max coeff error     = {:e}", self.poles.max_coeff_error)?;
        writeln!(f, "dh1_at_0            = {:e}", self.inequalities.dh1_at_0)?;
        writeln!(f, "cterm_at_0          = {:e}", self.inequalities.cterm_at_0)?;
        writeln!(f, "inequalities_ok     = {}", self.inequalities.ok)?;
        let k: Vec<String> = self.gains.iter().map(|v| format!("{v:e}")).collect();
        writeln!(f, "gains K1..K7        = [{}]", k.join(", "))?;
        write!(f, "decay bound l       = {:e}", self.decay_bound)
    }
}
