use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{response, response_with_jacobian, Trace, TraceModelParams};
use crate::error::{ensure_positive, Error, Result};
use crate::units::{convert, PhaseSpacePoint, Unit};

/// Response parameters measured independently of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownParams {
    pub a: f64,
    pub c: f64,
    pub omega_m: f64,
    #[serde(default = "super::default_true")]
    pub offset_modulated: bool,
}

impl KnownParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("amplitude A", self.a)?;
        ensure_positive("omega_m", self.omega_m)?;
        if !self.c.is_finite() {
            return Err(Error::Domain("offset c must be finite".into()));
        }
        Ok(())
    }

    fn with(&self, x: f64, p: f64, phi_r: f64, d: f64) -> TraceModelParams {
        TraceModelParams { a: self.a, c: self.c, omega_m: self.omega_m, x, p, phi_r, d, offset_modulated: self.offset_modulated }
    }
}

impl From<&TraceModelParams> for KnownParams {
    fn from(p: &TraceModelParams) -> Self {
        Self { a: p.a, c: p.c, omega_m: p.omega_m, offset_modulated: p.offset_modulated }
    }
}

/// Search grid of [`initial_guess`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessOptions {
    /// Largest displacement amplitude `sqrt(X^2 + P^2)` considered, radians.
    pub r_max: f64,
    pub r_step: f64,
    /// Mechanical phases tried over `[0, pi)`; the sign of the amplitude covers the rest.
    pub n_phase: usize,
    /// The trace is decimated to at most this many samples for the search.
    pub max_samples: usize,
}

impl Default for GuessOptions {
    fn default() -> Self {
        Self { r_max: 12.0, r_step: 0.1, n_phase: 48, max_samples: 500 }
    }
}

/// Starting point for the fit, with `d = 0`.
///
/// Writing `X cos wt + P sin wt = R cos(wt - beta)`, the unmodulated trace is
/// `A cos(R cos(wt - beta) + phi_r) + c`. For each `(beta, R)` on a grid the
/// phase `phi_r` enters linearly through `(cos phi_r, sin phi_r)` and is
/// solved in closed form; the cell that explains the most variance wins. A
/// flat trace gives `X = P = 0`.
pub fn initial_guess(trace: &Trace, known: &KnownParams, opts: &GuessOptions) -> Result<TraceModelParams> {
    trace.validate()?;
    known.validate()?;
    if !(opts.r_step > 0.0 && opts.r_max >= 0.0) || opts.n_phase == 0 || opts.max_samples < 4 {
        return Err(Error::Domain("invalid initial-guess grid".into()));
    }
    let stride = trace.len().div_ceil(opts.max_samples).max(1);
    let idx: Vec<usize> = (0..trace.len()).step_by(stride).collect();
    let ts: Vec<f64> = idx.iter().map(|&k| trace.time(k)).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| trace.samples[k] - known.c).collect();

    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let spread = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    if spread <= 1e-12 * known.a {
        let phi_r = (mean / known.a).clamp(-1.0, 1.0).acos();
        return Ok(known.with(0.0, 0.0, phi_r, 0.0));
    }

    let steps = (opts.r_max / opts.r_step).ceil() as i64;
    let r_lo = -(steps as f64) * opts.r_step;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0); // (score, beta, R, phi_r)
    for j in 0..opts.n_phase {
        let beta = PI * j as f64 / opts.n_phase as f64;
        let cs: Vec<f64> = ts.iter().map(|&t| (known.omega_m * t - beta).cos()).collect();
        let mut z: Vec<Complex64> = cs.iter().map(|&c| Complex64::from_polar(1.0, r_lo * c)).collect();
        let rot: Vec<Complex64> = cs.iter().map(|&c| Complex64::from_polar(1.0, opts.r_step * c)).collect();
        for step in 0..=2 * steps {
            let r = r_lo + step as f64 * opts.r_step;
            let (mut scc, mut sss, mut scs, mut bc, mut bs) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (zk, &y) in z.iter().zip(&ys) {
                scc += zk.re * zk.re;
                sss += zk.im * zk.im;
                scs += zk.re * zk.im;
                bc += y * zk.re;
                bs += y * zk.im;
            }
            let det = scc * sss - scs * scs;
            if det > 1e-9 * (scc * sss).max(f64::MIN_POSITIVE) {
                let a1 = (sss * bc - scs * bs) / det;
                let a2 = (scc * bs - scs * bc) / det;
                let score = a1 * bc + a2 * bs;
                if score > best.0 {
                    best = (score, beta, r, (-a2).atan2(a1));
                }
            }
            for (zk, w) in z.iter_mut().zip(&rot) {
                *zk *= w;
            }
        }
    }
    let (_, beta, r, phi_r) = best;
    Ok(known.with(r * beta.cos(), r * beta.sin(), phi_r, 0.0))
}

/// Damping schedule and stopping rules of [`fit_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_iterations: usize,
    /// Relative cost decrease and step norm below which the fit stops.
    pub tolerance: f64,
    /// Fit `d`; when false it stays at its guessed value.
    pub fit_modulation: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { lambda0: 1e-3, lambda_up: 10.0, lambda_down: 0.3, max_iterations: 200, tolerance: 1e-10, fit_modulation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: TraceModelParams,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Half the sum of squared residuals after each accepted step, starting
    /// with the guess.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    /// The equivalent solution `(-X, -P, -phi_r)`; it produces an identical
    /// trace for every `d`.
    pub fn mirror(&self) -> TraceModelParams {
        TraceModelParams { x: -self.params.x, p: -self.params.p, phi_r: -self.params.phi_r, ..self.params }
    }
}

/// Maps `phi_r` into `[0, pi)` using the symmetry `(X, P, phi_r) -> (-X, -P, -phi_r)`
/// and `2 pi` periodicity. The fixed point `phi_r = pi` is left at `pi`.
pub fn canonicalize(params: &TraceModelParams) -> TraceModelParams {
    let mut out = *params;
    out.phi_r = params.phi_r.rem_euclid(TAU);
    if out.phi_r > PI {
        out.phi_r = TAU - out.phi_r;
        out.x = -out.x;
        out.p = -out.p;
    }
    out
}

struct Linearization {
    cost: f64,
    jtj: Matrix4<f64>,
    jtr: Vector4<f64>,
}

fn cost_of(trace: &Trace, params: &TraceModelParams) -> f64 {
    0.5 * trace
        .samples
        .iter()
        .enumerate()
        .map(|(k, y)| (y - response(params, trace.time(k))).powi(2))
        .sum::<f64>()
}

fn linearize(trace: &Trace, params: &TraceModelParams, free: &[bool; 4]) -> Linearization {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    let mut cost = 0.0;
    for (k, y) in trace.samples.iter().enumerate() {
        let (f, jac) = response_with_jacobian(params, trace.time(k));
        let r = y - f;
        cost += 0.5 * r * r;
        let mut g = Vector4::from(jac);
        for (gi, &on) in g.iter_mut().zip(free) {
            if !on {
                *gi = 0.0;
            }
        }
        jtj += g * g.transpose();
        jtr += g * r;
    }
    Linearization { cost, jtj, jtr }
}

fn apply_step(params: &TraceModelParams, step: &Vector4<f64>) -> TraceModelParams {
    TraceModelParams {
        x: params.x + step[0],
        p: params.p + step[1],
        phi_r: params.phi_r + step[2],
        d: (params.d + step[3]).clamp(0.0, 1.0 - 1e-12),
        ..*params
    }
}

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of `(X, P, phi_r, d)`.
///
/// Steps solve `(J^T J + lambda diag(J^T J)) delta = J^T r` and are kept only
/// if they lower the cost, so the recorded cost never increases. Running out
/// of iterations is reported through `converged = false` together with the
/// best parameters found.
pub fn fit_trace(trace: &Trace, known: &KnownParams, guess: &TraceModelParams, opts: &FitOptions) -> Result<FitResult> {
    trace.validate()?;
    known.validate()?;
    if ![guess.x, guess.p, guess.phi_r, guess.d].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("initial guess must be finite".into()));
    }
    let free = [true, true, true, opts.fit_modulation];
    let mut params = known.with(guess.x, guess.p, guess.phi_r, guess.d.clamp(0.0, 1.0 - 1e-12));
    let mut lambda = opts.lambda0;
    let mut lin = linearize(trace, &params, &free);
    let mut history = vec![lin.cost];
    let mut converged = lin.cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let mut damped = lin.jtj;
        for i in 0..4 {
            let diag = lin.jtj[(i, i)];
            damped[(i, i)] = if free[i] { diag + lambda * diag.max(1e-12) } else { 1.0 };
        }
        let step = damped.cholesky().map(|ch| ch.solve(&lin.jtr));
        let Some(step) = step else {
            lambda *= opts.lambda_up;
            continue;
        };
        let trial = apply_step(&params, &step);
        let trial_cost = cost_of(trace, &trial);
        if trial_cost < lin.cost {
            let decrease = lin.cost - trial_cost;
            params = trial;
            lin = linearize(trace, &params, &free);
            history.push(lin.cost);
            lambda = (lambda * opts.lambda_down).max(1e-15);
            if decrease <= opts.tolerance * history[history.len() - 2] || step.norm() <= opts.tolerance || lin.cost == 0.0 {
                converged = true;
            }
        } else {
            lambda *= opts.lambda_up;
            if step.norm() <= opts.tolerance || lambda > 1e16 {
                // no downhill direction left at this resolution
                converged = true;
            }
        }
    }

    let rms_residual = (2.0 * lin.cost / trace.len() as f64).sqrt();
    Ok(FitResult { params: canonicalize(&params), rms_residual, iterations, converged, cost_history: history })
}

/// Status of one trace in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum FitFlag {
    Converged,
    NotConverged,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFitOutcome {
    /// Recovered quadratures in readout-range units.
    pub point: Option<PhaseSpacePoint>,
    pub fit: Option<FitResult>,
    pub flag: FitFlag,
}

/// Fits every trace independently, in parallel, keeping input order. A bad
/// trace is flagged without affecting the others.
pub fn batch_fit(traces: &[Trace], known: &KnownParams, guess: &GuessOptions, opts: &FitOptions) -> Result<Vec<BatchFitOutcome>> {
    if traces.is_empty() {
        return Err(Error::Empty("no traces to fit".into()));
    }
    known.validate()?;
    Ok(traces
        .par_iter()
        .map(|trace| {
            let attempt = initial_guess(trace, known, guess).and_then(|g| fit_trace(trace, known, &g, opts));
            match attempt {
                Ok(fit) => {
                    let rad = PhaseSpacePoint::new(fit.params.x, fit.params.p, Unit::Radians);
                    let point = convert(&rad, Unit::ReadoutRange, None).ok();
                    let flag = if fit.converged { FitFlag::Converged } else { FitFlag::NotConverged };
                    BatchFitOutcome { point, fit: Some(fit), flag }
                }
                Err(e) => BatchFitOutcome { point: None, fit: None, flag: FitFlag::Failed(e.to_string()) },
            }
        })
        .collect())
}
