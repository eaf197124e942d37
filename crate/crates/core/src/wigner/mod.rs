//! Conditional mechanical states in phase space.
//!
//! The measurement operator is diagonal in position, so the conditional
//! density matrix in the position basis is
//! `K_out(x, x') = Y(x) conj(Y(x')) K_th(x, x') / P`. The Wigner function is
//! obtained from that kernel by
//!
//! ```text
//! W(x, p) = (1 / pi) Int dy e^{2 i p y} K(x - y, x + y)
//! ```
//!
//! with `[X, P] = i`, giving the ground state a peak of `1 / pi`. A kick
//! `e^{i mu X}` shifts the Wigner function towards positive `p`.

mod io;
mod negativity;
mod transform;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiport::{self, Measurement};
use crate::twoport;
use crate::units::{thermal_position_pdf, CouplingConfig, ThermalState};

pub use io::{read_wigner_binary, write_wigner_binary, write_wigner_csv, WignerBinary};
pub use negativity::{
    min_wigner_closed, min_wigner_limits, refine_minimum, wigner_minimum_numeric, CouplingRegime, WignerMinimum,
};
pub use transform::{wigner_transform, GridSpec, WignerGrid};

/// Off-diagonal thermal density kernel
/// `exp(-(x + x')^2 / (4 v) - (x - x')^2 v / 4) / sqrt(pi v)`, `v = 1 + 2 nbar`.
pub fn thermal_kernel(nbar: f64, x: f64, xp: f64) -> f64 {
    let v = 1.0 + 2.0 * nbar;
    let s = x + xp;
    let d = x - xp;
    (-s * s / (4.0 * v) - d * d * v / 4.0).exp() / (PI * v).sqrt()
}

/// A thermal state conditioned on a photon-counting outcome.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalState {
    pub measurement: Measurement,
    pub cfg: CouplingConfig,
    pub thermal: ThermalState,
    // thermal average of |shape|^2
    norm: f64,
}

impl ConditionalState {
    pub fn new(measurement: Measurement, cfg: &CouplingConfig, nbar: f64) -> Result<Self> {
        let thermal = ThermalState::new(nbar)?;
        let (norm, photons) = match measurement {
            Measurement::TwoPort(ev) => (twoport::herald_shape(ev, cfg, &thermal)?, ev.photons()),
            Measurement::Noon(n) => {
                multiport::multiport_matrix(n)?;
                (multiport::herald_n_shape(n, cfg, nbar), n as u32)
            }
        };
        if !(norm > 0.0) || (cfg.alpha == 0.0 && photons > 0) {
            return Err(Error::Conditioning(format!(
                "{measurement} has zero probability at mu={}, phi={}, alpha={}, nbar={nbar}",
                cfg.mu, cfg.phi, cfg.alpha
            )));
        }
        Ok(Self { measurement, cfg: *cfg, thermal, norm })
    }

    /// Heralding probability of the conditioning outcome.
    pub fn herald_probability(&self) -> f64 {
        let prefactor = match self.measurement {
            Measurement::TwoPort(ev) => ev.filter_prefactor(self.cfg.alpha),
            Measurement::Noon(n) => multiport::noon_prefactor(n, self.cfg.alpha),
        };
        prefactor * self.norm
    }

    /// Largest momentum kick present in the superposition.
    pub fn max_kick(&self) -> f64 {
        let photons = match self.measurement {
            Measurement::TwoPort(ev) => ev.photons() as f64,
            Measurement::Noon(n) => n as f64,
        };
        photons * self.cfg.mu
    }

    /// Writes the measurement operator as `e^{i s x} - e^{i psi}` up to a
    /// constant, when it has that form. Returns `(s, psi)` with `psi` in
    /// `[0, 2 pi)`; the Wigner minimum then sits at `(0, s / 2)` and equals
    /// [`min_wigner_closed`] exactly when `psi = 0`.
    pub fn two_component(&self) -> Option<(f64, f64)> {
        let (mu, phi) = (self.cfg.mu, self.cfg.phi);
        let (s, psi) = match self.measurement {
            Measurement::TwoPort(ev) => match (ev.m, ev.n) {
                (0, 1) => (mu, phi),
                (1, 0) => (mu, phi + PI),
                (1, 1) => (2.0 * mu, 2.0 * phi),
                _ => return None,
            },
            Measurement::Noon(n) => (n as f64 * mu, n as f64 * (phi + PI)),
        };
        Some((s, psi.rem_euclid(std::f64::consts::TAU)))
    }

    /// Whether the closed-form minimum applies: a two-component state with
    /// aligned reference phase, to within `tol` radians.
    pub fn closed_form_minimum_applies(&self, tol: f64) -> bool {
        match self.two_component() {
            Some((_, psi)) => psi.min(std::f64::consts::TAU - psi) <= tol,
            None => false,
        }
    }

    /// Measurement operator up to its alpha-dependent scale.
    fn amplitude(&self, x: f64) -> Complex64 {
        match self.measurement {
            Measurement::TwoPort(ev) => twoport::upsilon_shape(ev, &self.cfg, x),
            Measurement::Noon(n) => multiport::upsilon_n_shape(n, &self.cfg, x),
        }
    }

    /// Normalized kernel `<x|rho_out|x'>`.
    pub fn kernel(&self, x: f64, xp: f64) -> Complex64 {
        self.amplitude(x) * self.amplitude(xp).conj() * (thermal_kernel(self.thermal.nbar, x, xp) / self.norm)
    }

    pub fn position_pdf(&self, x: f64) -> f64 {
        self.amplitude(x).norm_sqr() * thermal_position_pdf(&self.thermal, x) / self.norm
    }

    /// Wigner function at a single point, by trapezoidal quadrature in `y`
    /// with a step fine enough to keep aliasing below ~1e-15.
    pub fn wigner_at(&self, x: f64, p: f64) -> f64 {
        let v = self.thermal.spread();
        // K(x - y, x + y) carries exp(-v y^2); |y| <= sqrt(80 / v) leaves e^{-80}
        let reach = (80.0 / v).sqrt();
        let bandwidth = 2.0 * p.abs() + self.max_kick() + (4.0 * v * 40.0).sqrt() + 1.0;
        let step = std::f64::consts::TAU / bandwidth;
        let half_count = (reach / step).ceil() as i64;
        let mut acc = self.kernel(x, x);
        for k in 1..=half_count {
            let y = k as f64 * step;
            let rot = Complex64::from_polar(1.0, 2.0 * p * y);
            acc += rot * self.kernel(x - y, x + y) + rot.conj() * self.kernel(x + y, x - y);
        }
        acc.re * step / PI
    }
}

/// Density kernel sampled on a symmetric position grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityKernel {
    pub grid_x: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl DensityKernel {
    pub fn len(&self) -> usize {
        self.grid_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_x.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid_x.len() + j]
    }

    pub fn spacing(&self) -> f64 {
        self.grid_x[1] - self.grid_x[0]
    }

    pub fn from_fn<F>(grid_x: &[f64], f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        check_grid(grid_x)?;
        let n = grid_x.len();
        let values = (0..n * n)
            .into_par_iter()
            .map(|idx| f(grid_x[idx / n], grid_x[idx % n]))
            .collect();
        Ok(Self { grid_x: grid_x.to_vec(), values })
    }

    pub fn thermal(nbar: f64, grid_x: &[f64]) -> Result<Self> {
        ThermalState::new(nbar)?;
        Self::from_fn(grid_x, |x, xp| Complex64::new(thermal_kernel(nbar, x, xp), 0.0))
    }

    /// `max |K(x, x') - conj(K(x', x))|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Trapezoidal integral of the diagonal.
    pub fn trace(&self) -> f64 {
        let n = self.len();
        let dx = self.spacing();
        let inner: f64 = (0..n).map(|i| self.get(i, i).re).sum();
        dx * (inner - 0.5 * (self.get(0, 0).re + self.get(n - 1, n - 1).re))
    }

    /// `Tr(rho^2) = Int Int |K|^2 dx dx'`.
    pub fn purity(&self) -> f64 {
        let dx = self.spacing();
        self.values.iter().map(|k| k.norm_sqr()).sum::<f64>() * dx * dx
    }

    /// Largest `|K|` on the outer rows and columns.
    pub fn boundary_magnitude(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for (i, j) in [(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                worst = worst.max(self.get(i, j).norm());
            }
        }
        worst
    }
}

fn check_grid(grid_x: &[f64]) -> Result<()> {
    if grid_x.len() < 3 {
        return Err(Error::Resolution("kernel grid needs at least 3 points".into()));
    }
    let dx = grid_x[1] - grid_x[0];
    if !(dx > 0.0) {
        return Err(Error::Resolution("kernel grid must be increasing".into()));
    }
    let tol = 1e-9 * dx;
    if grid_x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > tol) {
        return Err(Error::Resolution("kernel grid must be uniform".into()));
    }
    Ok(())
}

/// Conditional density kernel on `grid_x` for a measurement outcome.
pub fn conditional_kernel(measurement: Measurement, cfg: &CouplingConfig, nbar: f64, grid_x: &[f64]) -> Result<DensityKernel> {
    let state = ConditionalState::new(measurement, cfg, nbar)?;
    DensityKernel::from_fn(grid_x, |x, xp| state.kernel(x, xp))
}

/// `n` points evenly spaced over `[-half, half]`.
pub fn symmetric_grid(half: f64, n: usize) -> Vec<f64> {
    linspace(-half, half, n)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}
