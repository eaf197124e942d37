//! Readout-trace model and fitting.
//!
//! A balanced detector behind the readout interferometer records
//!
//! ```text
//! f(t) = [A cos(X cos wt + P sin wt + phi_r) + c] * [1 - d |cos(wt + atan2(X, P) - pi/4)|]
//! ```
//!
//! over a window of a few mechanical periods. `X` and `P` are the mechanical
//! quadratures in radians of readout phase. [`fit_trace`] recovers
//! `(X, P, phi_r, d)` from a trace given `A`, `c` and `w`.

mod fit;
mod io;

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

pub use fit::{
    batch_fit, canonicalize, fit_trace, initial_guess, BatchFitOutcome, FitFlag, FitOptions, FitResult, GuessOptions,
    KnownParams,
};
pub use io::{read_trace_binary, read_trace_csv, write_trace_binary, write_trace_csv};

/// Parameters of the detector response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceModelParams {
    /// Full fringe amplitude, volts.
    pub a: f64,
    /// DC offset, volts.
    pub c: f64,
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
    pub x: f64,
    pub p: f64,
    /// Readout interferometer phase, radians.
    pub phi_r: f64,
    /// Relative amplitude-modulation depth in `[0, 1)`.
    pub d: f64,
    /// Whether the modulation also scales the offset `c`.
    #[serde(default = "default_true")]
    pub offset_modulated: bool,
}

fn default_true() -> bool {
    true
}

impl TraceModelParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("amplitude A", self.a)?;
        ensure_positive("omega_m", self.omega_m)?;
        if !(0.0..1.0).contains(&self.d) {
            return Err(Error::Domain(format!("modulation depth d must lie in [0, 1), got {}", self.d)));
        }
        if ![self.c, self.x, self.p, self.phi_r].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("trace parameters must be finite".into()));
        }
        Ok(())
    }

    /// `atan2(X, P)`, zero at the origin.
    pub fn mechanical_phase(&self) -> f64 {
        if self.x == 0.0 && self.p == 0.0 {
            0.0
        } else {
            self.x.atan2(self.p)
        }
    }
}

/// Detector voltage at time `t`.
pub fn response(params: &TraceModelParams, t: f64) -> f64 {
    let (s, c) = (params.omega_m * t).sin_cos();
    let fringe = params.a * (params.x * c + params.p * s + params.phi_r).cos();
    let envelope = 1.0 - params.d * (params.omega_m * t + params.mechanical_phase() - FRAC_PI_4).cos().abs();
    if params.offset_modulated {
        (fringe + params.c) * envelope
    } else {
        fringe * envelope + params.c
    }
}

/// Value and partial derivatives with respect to `(X, P, phi_r, d)`.
///
/// The derivative of `|cos u|` is taken as `-sign(cos u) sin u`, which is
/// undefined only on the measure-zero set `cos u = 0`. At `X = P = 0` the
/// mechanical phase is pinned and its contribution is left out.
pub fn response_with_jacobian(params: &TraceModelParams, t: f64) -> (f64, [f64; 4]) {
    let (sw, cw) = (params.omega_m * t).sin_cos();
    let psi = params.x * cw + params.p * sw + params.phi_r;
    let (sin_psi, cos_psi) = psi.sin_cos();
    let fringe = params.a * cos_psi;
    let u = params.omega_m * t + params.mechanical_phase() - FRAC_PI_4;
    let (sin_u, cos_u) = u.sin_cos();
    let envelope = 1.0 - params.d * cos_u.abs();
    let modulated = if params.offset_modulated { fringe + params.c } else { fringe };
    let value = modulated * envelope + if params.offset_modulated { 0.0 } else { params.c };

    // d envelope / d theta
    let d_env_dtheta = params.d * cos_u.signum() * sin_u;
    let r2 = params.x * params.x + params.p * params.p;
    let (dtheta_dx, dtheta_dp) = if r2 > 0.0 { (params.p / r2, -params.x / r2) } else { (0.0, 0.0) };
    let dfringe = -params.a * sin_psi * envelope;
    (
        value,
        [
            dfringe * cw + modulated * d_env_dtheta * dtheta_dx,
            dfringe * sw + modulated * d_env_dtheta * dtheta_dp,
            dfringe,
            -modulated * cos_u.abs(),
        ],
    )
}

/// Sampled detector trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<f64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Time of the first sample relative to the trigger, seconds.
    pub t0: f64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Empty("trace has no samples".into()));
        }
        ensure_positive("sample rate", self.sample_rate)?;
        if !self.t0.is_finite() {
            return Err(Error::Format("trace start time is not finite".into()));
        }
        if let Some(k) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("trace sample {k} is not finite")));
        }
        Ok(())
    }
}

/// Sampling window of a synthesized trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTiming {
    pub n: usize,
    pub sample_rate: f64,
    pub t0: f64,
}

impl Default for TraceTiming {
    /// 5000 samples at 100 MS/s centred on the trigger.
    fn default() -> Self {
        Self { n: 5000, sample_rate: 1e8, t0: -25e-6 }
    }
}

/// Samples the response at `t0 + k / rate` and adds white Gaussian noise.
pub fn synthesize_trace<R: Rng + ?Sized>(
    params: &TraceModelParams,
    noise_sigma: f64,
    timing: &TraceTiming,
    rng: &mut R,
) -> Result<Trace> {
    params.validate()?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    if timing.n == 0 {
        return Err(Error::Domain("trace needs at least one sample".into()));
    }
    ensure_positive("sample rate", timing.sample_rate)?;
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let samples = (0..timing.n)
        .map(|k| {
            let clean = response(params, timing.t0 + k as f64 / timing.sample_rate);
            if noise_sigma > 0.0 {
                clean + noise.sample(rng)
            } else {
                clean
            }
        })
        .collect();
    Ok(Trace { samples, sample_rate: timing.sample_rate, t0: timing.t0 })
}
