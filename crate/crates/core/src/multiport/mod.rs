//! N-port interferometry and projection onto optical N00N states.
//!
//! Two coherent states (one carrying the mechanical phase, one the reference
//! phase `phi`) and `N - 2` vacuum modes pass through the symmetric
//! DFT-type multiport. An N-fold coincidence (one photon per output) projects
//! the two occupied inputs onto `|N0> - (-1)^N |0N>`, so the mechanics sees a
//! superposition of no kick and an `N`-photon kick:
//!
//! ```text
//! Y_N(x) = N^{-N/2} e^{-a^2} a^N (e^{i N mu x} - (-1)^N e^{i N phi})
//! ```

mod noon;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::units::{thermal_position_pdf, CouplingConfig, ThermalState};

pub use noon::{noon_projection_check, NoonProjection};

/// `N x N` unitary `M[k][l] = e^{i 2 pi k l / N} / sqrt N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiportMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl MultiportMatrix {
    pub fn ports(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    /// Output amplitudes `M v` for input coherent amplitudes `v`.
    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.n, "input length must match port count");
        (0..self.n)
            .map(|k| (0..self.n).map(|l| self.get(k, l) * input[l]).sum())
            .collect()
    }

    /// `max |(M M^+ - I)_{kl}|`.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n {
            for l in 0..self.n {
                let dot: Complex64 = (0..self.n).map(|j| self.get(k, j) * self.get(l, j).conj()).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// The canonical symmetric multiport on `n >= 2` modes.
pub fn multiport_matrix(n: usize) -> Result<MultiportMatrix> {
    check_ports(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut entries = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            // reduce k*l first so the phase stays exact for large n
            let phase = TAU * ((k * l) % n) as f64 / n as f64;
            entries.push(Complex64::from_polar(scale, phase));
        }
    }
    Ok(MultiportMatrix { n, entries })
}

fn check_ports(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::Domain(format!("multiport needs at least 2 ports, got {n}")))
    } else {
        Ok(())
    }
}

/// `N^{-N} e^{-2 a^2} a^{2N}`; the filter is this times `2 (1 - (-1)^N cos(N mu x - N phi))`.
pub fn noon_prefactor(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    (-2.0 * alpha * alpha - nf * nf.ln()).exp() * alpha.powi(2 * n as i32)
}

// Phase of the reference term: (-1)^N e^{i N phi} = e^{i N (phi + pi)}.
fn reference_phase(n: usize, phi: f64) -> f64 {
    (n as f64 * (phi + PI)).rem_euclid(TAU)
}

/// `Y_N(x)` for an N-fold coincidence.
pub fn upsilon_n(n: usize, cfg: &CouplingConfig, x: f64) -> Result<Complex64> {
    check_ports(n)?;
    let nf = n as f64;
    let scale = (-cfg.alpha * cfg.alpha - 0.5 * nf * nf.ln()).exp() * cfg.alpha.powi(n as i32);
    let a = nf * cfg.mu * x;
    let b = reference_phase(n, cfg.phi);
    // e^{ia} - e^{ib} = 2i sin((a - b) / 2) e^{i (a + b) / 2}
    let diff = Complex64::new(0.0, 2.0 * (0.5 * (a - b)).sin()) * Complex64::from_polar(1.0, 0.5 * (a + b));
    Ok(diff * scale)
}

/// Independent route to `Y_N`: propagate the coherent input through the
/// multiport and project each output onto one photon.
pub fn upsilon_n_coherent_oracle(n: usize, cfg: &CouplingConfig, x: f64) -> Result<Complex64> {
    let m = multiport_matrix(n)?;
    let mut input = vec![Complex64::new(0.0, 0.0); n];
    input[0] = Complex64::from_polar(cfg.alpha, cfg.mu * x);
    input[1] = Complex64::from_polar(cfg.alpha, cfg.phi);
    let out = m.apply(&input);
    // <1|w> = w e^{-|w|^2 / 2}; sum |w|^2 = 2 alpha^2 by unitarity
    let product: Complex64 = out.iter().product();
    Ok(product * (-cfg.alpha * cfg.alpha).exp())
}

/// `upsilon_n` divided by `sqrt(noon_prefactor)`; squared modulus `filter_n_shape`.
pub(crate) fn upsilon_n_shape(n: usize, cfg: &CouplingConfig, x: f64) -> Complex64 {
    let a = n as f64 * cfg.mu * x;
    let b = reference_phase(n, cfg.phi);
    Complex64::new(0.0, 2.0 * (0.5 * (a - b)).sin()) * Complex64::from_polar(1.0, 0.5 * (a + b))
}

/// Filter `|Y_N(x)|^2`.
pub fn filter_n(n: usize, cfg: &CouplingConfig, x: f64) -> Result<f64> {
    check_ports(n)?;
    Ok(noon_prefactor(n, cfg.alpha) * filter_n_shape(n, cfg, x))
}

/// `2 (1 - (-1)^N cos(N mu x - N phi))`, written as `4 sin^2` to keep
/// precision near the dark fringes.
pub(crate) fn filter_n_shape(n: usize, cfg: &CouplingConfig, x: f64) -> f64 {
    let s = (0.5 * (n as f64 * cfg.mu * x - reference_phase(n, cfg.phi))).sin();
    4.0 * s * s
}

/// Thermal average of `filter_n_shape`.
pub(crate) fn herald_n_shape(n: usize, cfg: &CouplingConfig, nbar: f64) -> f64 {
    let nf = n as f64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let decay = (-0.25 * cfg.mu * cfg.mu * (1.0 + 2.0 * nbar) * nf * nf).exp();
    2.0 * (1.0 - sign * decay * (nf * cfg.phi).cos())
}

/// Closed-form coincidence probability on a thermal state.
pub fn herald_probability_n(n: usize, cfg: &CouplingConfig, nbar: f64) -> Result<f64> {
    check_ports(n)?;
    ThermalState::new(nbar)?;
    Ok(noon_prefactor(n, cfg.alpha) * herald_n_shape(n, cfg, nbar))
}

/// Coincidence probability by quadrature of `|Y_N|^2` against the thermal
/// position distribution.
pub fn herald_probability_n_quadrature(n: usize, cfg: &CouplingConfig, state: &ThermalState) -> Result<f64> {
    check_ports(n)?;
    let half = 20.0 * state.position_std();
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-13, ..Default::default() };
    let est = integrate(|x| filter_n_shape(n, cfg, x) * thermal_position_pdf(state, x), -half, half, opts)?;
    Ok(noon_prefactor(n, cfg.alpha) * est.value)
}

/// Fringe period of the N-photon filter, `2 pi / (N mu)`.
pub fn fringe_period_n(n: usize, mu: f64) -> f64 {
    TAU / (n as f64 * mu)
}

/// A measurement that conditions the mechanics: a two-port click pattern or
/// an N-fold multiport coincidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measurement {
    TwoPort(crate::twoport::ClickEvent),
    Noon(usize),
}

impl std::fmt::Display for Measurement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measurement::TwoPort(ev) => write!(f, "{ev}"),
            Measurement::Noon(n) => write!(f, "N={n}"),
        }
    }
}
