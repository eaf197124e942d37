//! Two-port (Mach-Zehnder) photon counting.
//!
//! A coherent state `|alpha>|alpha e^{i phi}>` enters the two interferometer
//! arms, arm 1 picks up the radiation-pressure phase `mu X`, and the arms are
//! recombined on a 50:50 beam splitter before photon counting. Detecting `m`
//! photons in output 1 and `n` in output 2 applies the position-diagonal
//! measurement operator
//!
//! ```text
//! Y(x) = e^{-a^2} / sqrt(m! n!) (a / sqrt 2)^{m+n} (e^{i mu x} + e^{i phi})^m (e^{i mu x} - e^{i phi})^n
//! ```
//!
//! to the mechanics, and the position distribution is multiplied by the
//! filter `|Y(x)|^2`.

mod fock;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::units::{thermal_position_pdf, CouplingConfig, ThermalState};

pub use fock::upsilon_fock_oracle;

/// Photon counts `{m, n}` registered at the two interferometer outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClickEvent {
    pub m: u32,
    pub n: u32,
}

impl ClickEvent {
    pub const NONE: ClickEvent = ClickEvent { m: 0, n: 0 };

    pub const fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }

    pub fn photons(&self) -> u32 {
        self.m + self.n
    }

    /// `ln(m! n!)`.
    fn ln_factorials(&self) -> f64 {
        ln_factorial(u64::from(self.m)) + ln_factorial(u64::from(self.n))
    }

    /// `e^{-2 a^2} a^{2(m+n)} / (m! n!)`, the alpha-dependent scale of the filter.
    pub fn filter_prefactor(&self, alpha: f64) -> f64 {
        (-2.0 * alpha * alpha - self.ln_factorials()).exp() * alpha.powi(2 * self.photons() as i32)
    }

    /// Upper bound of the filter over all positions: the prefactor times `2^{m+n}`.
    pub fn filter_bound(&self, alpha: f64) -> f64 {
        self.filter_prefactor(alpha) * 2f64.powi(self.photons() as i32)
    }
}

impl fmt::Display for ClickEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.m, self.n)
    }
}

impl std::str::FromStr for ClickEvent {
    type Err = Error;

    /// Parses `"m,n"`, optionally wrapped in braces.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut parts = inner.split(',').map(str::trim);
        let bad = || Error::Config(format!("invalid click event '{s}', expected \"m,n\""));
        let m = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let n = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self { m, n })
    }
}

/// Measurement operator amplitude at position `x` (quantum-noise units).
pub fn upsilon(event: ClickEvent, cfg: &CouplingConfig, x: f64) -> Complex64 {
    let scale = (-cfg.alpha * cfg.alpha - 0.5 * event.ln_factorials()).exp()
        * (cfg.alpha / std::f64::consts::SQRT_2).powi(event.photons() as i32);
    // e^{i mu x} +- e^{i phi} = e^{i (mu x + phi) / 2} * {2 cos, 2i sin}((mu x - phi) / 2)
    let half = 0.5 * (cfg.mu * x - cfg.phi);
    let common = Complex64::from_polar(1.0, 0.5 * (cfg.mu * x + cfg.phi) * event.photons() as f64);
    let plus = (2.0 * half.cos()).powi(event.m as i32);
    let minus = Complex64::new(0.0, 2.0 * half.sin()).powi(event.n as i32);
    common * minus * (scale * plus)
}

/// `upsilon` divided by `sqrt(filter_prefactor)`; its squared modulus is [`filter_shape`].
pub(crate) fn upsilon_shape(event: ClickEvent, cfg: &CouplingConfig, x: f64) -> Complex64 {
    let half = 0.5 * (cfg.mu * x - cfg.phi);
    let common = Complex64::from_polar(1.0, 0.5 * (cfg.mu * x + cfg.phi) * event.photons() as f64);
    let plus = (std::f64::consts::SQRT_2 * half.cos()).powi(event.m as i32);
    let minus = Complex64::new(0.0, std::f64::consts::SQRT_2 * half.sin()).powi(event.n as i32);
    common * minus * plus
}

/// `(1 + cos(mu x - phi))^m (1 - cos(mu x - phi))^n`, the filter without its alpha scale.
pub fn filter_shape(event: ClickEvent, cfg: &CouplingConfig, x: f64) -> f64 {
    let half = 0.5 * (cfg.mu * x - cfg.phi);
    let (s, c) = half.sin_cos();
    (2.0 * c * c).powi(event.m as i32) * (2.0 * s * s).powi(event.n as i32)
}

/// Filter function `|Y(x)|^2` acting on the position distribution.
pub fn filter(event: ClickEvent, cfg: &CouplingConfig, x: f64) -> f64 {
    event.filter_prefactor(cfg.alpha) * filter_shape(event, cfg, x)
}

/// Closed-form heralding probability for `{0,0}`, `{0,1}`, `{1,0}` and `{1,1}`.
///
/// Other events have no tabulated form; use [`herald_probability_quadrature`].
pub fn herald_probability_closed(event: ClickEvent, cfg: &CouplingConfig, nbar: f64) -> Result<f64> {
    let shape = herald_shape_closed(event, cfg, nbar)?;
    Ok(event.filter_prefactor(cfg.alpha) * shape)
}

// Thermal average of `filter_shape`.
fn herald_shape_closed(event: ClickEvent, cfg: &CouplingConfig, nbar: f64) -> Result<f64> {
    let state = ThermalState::new(nbar)?;
    let decay = (-cfg.mu * cfg.mu * state.spread() / 4.0).exp();
    match (event.m, event.n) {
        (0, 0) => Ok(1.0),
        (0, 1) => Ok(1.0 - decay * cfg.phi.cos()),
        (1, 0) => Ok(1.0 + decay * cfg.phi.cos()),
        (1, 1) => Ok(0.5 * (1.0 - decay.powi(4) * (2.0 * cfg.phi).cos())),
        _ => Err(Error::Domain(format!(
            "no closed-form heralding probability for event {event}; use quadrature"
        ))),
    }
}

/// Heralding probability by adaptive quadrature of the filter against the
/// thermal position distribution over +-20 standard deviations.
pub fn herald_probability_quadrature(event: ClickEvent, cfg: &CouplingConfig, state: &ThermalState) -> Result<f64> {
    Ok(event.filter_prefactor(cfg.alpha) * herald_shape_quadrature(event, cfg, state)?)
}

fn herald_shape_quadrature(event: ClickEvent, cfg: &CouplingConfig, state: &ThermalState) -> Result<f64> {
    let half = 20.0 * state.position_std();
    // shape <= 2^{m+n} and the alpha prefactor <= 1, so this keeps the
    // absolute error on the probability below 1e-10.
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-13, ..Default::default() };
    let est = integrate(|x| filter_shape(event, cfg, x) * thermal_position_pdf(state, x), -half, half, opts)?;
    Ok(est.value)
}

/// Thermal average of the filter shape, closed form where one exists.
pub(crate) fn herald_shape(event: ClickEvent, cfg: &CouplingConfig, state: &ThermalState) -> Result<f64> {
    match herald_shape_closed(event, cfg, state.nbar) {
        Ok(v) => Ok(v),
        Err(_) => herald_shape_quadrature(event, cfg, state),
    }
}

/// Position distribution of the conditional state, normalized.
///
/// Independent of `alpha`, which cancels between the filter and the
/// heralding probability.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalPositionPdf {
    pub event: ClickEvent,
    pub cfg: CouplingConfig,
    pub state: ThermalState,
    norm: f64,
}

impl ConditionalPositionPdf {
    pub fn new(event: ClickEvent, cfg: &CouplingConfig, state: &ThermalState) -> Result<Self> {
        let norm = herald_shape(event, cfg, state)?;
        if !(norm > 0.0) || (cfg.alpha == 0.0 && event.photons() > 0) {
            return Err(Error::Conditioning(format!(
                "event {event} has zero probability at mu={}, phi={}, alpha={}, nbar={}",
                cfg.mu, cfg.phi, cfg.alpha, state.nbar
            )));
        }
        Ok(Self { event, cfg: *cfg, state: *state, norm })
    }

    pub fn density(&self, x: f64) -> f64 {
        filter_shape(self.event, &self.cfg, x) * thermal_position_pdf(&self.state, x) / self.norm
    }
}

/// Conditional position density at `x`; see [`ConditionalPositionPdf`] for
/// evaluating many points.
pub fn conditional_position_pdf(event: ClickEvent, cfg: &CouplingConfig, state: &ThermalState, x: f64) -> Result<f64> {
    Ok(ConditionalPositionPdf::new(event, cfg, state)?.density(x))
}

/// Filter sampled on a position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl FilterCurve {
    pub fn sample(event: ClickEvent, cfg: &CouplingConfig, xs: &[f64]) -> Self {
        Self {
            xs: xs.to_vec(),
            values: xs.iter().map(|&x| filter(event, cfg, x)).collect(),
        }
    }

    /// Interior local maxima, refined by a parabola through the neighbours.
    pub fn peaks(&self) -> Vec<f64> {
        local_maxima(&self.xs, &self.values)
    }

    /// Mean spacing between successive peaks, `None` with fewer than two.
    pub fn mean_peak_spacing(&self) -> Option<f64> {
        let peaks = self.peaks();
        if peaks.len() < 2 {
            return None;
        }
        Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
    }
}

/// Positions of strict interior local maxima of a uniformly sampled curve.
pub fn local_maxima(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        let (l, c, r) = (ys[i - 1], ys[i], ys[i + 1]);
        if c > l && c >= r && c > 0.0 {
            let denom = l - 2.0 * c + r;
            let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            let dx = xs[i + 1] - xs[i];
            out.push(xs[i] + shift * dx);
        }
    }
    out
}

/// Fringe period of the filter, `2 pi / mu` for single clicks and
/// `pi / mu` for `{1,1}`.
pub fn fringe_period(event: ClickEvent, mu: f64) -> f64 {
    match (event.m, event.n) {
        (0, 0) => f64::INFINITY,
        (m, n) if m > 0 && n > 0 => PI / mu,
        _ => 2.0 * PI / mu,
    }
}
