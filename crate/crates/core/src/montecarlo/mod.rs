//! Classical emulation of the click-conditioned experiment.
//!
//! Drive states are drawn from an isotropic Gaussian in phase space (Rayleigh
//! norm, uniform angle). Each draw is kept with probability
//! `filter(x) / sup filter`, which makes the kept `x` values follow the
//! conditional position distribution while `p` is left untouched.
//!
//! # Reproducibility
//!
//! Attempts are grouped into batches of [`EnsembleOptions::batch_size`]
//! draws. Batch `b` uses a ChaCha8 generator seeded with the run seed and
//! switched to stream `b`, so its draws depend only on `(seed, b)`. Batches run
//! in waves of fixed width and are merged in batch order, which makes the
//! ensemble identical for any number of worker threads.

mod histogram;
pub mod stats;

use std::f64::consts::TAU;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::multiport::{self, Measurement};
use crate::twoport::{self, ClickEvent};
use crate::units::{conversion_factor, CouplingConfig, MechanicalConstants, PhaseSpacePoint, ThermalState, Unit};

pub use histogram::{bin_probabilities, histogram, EnsembleHistograms, Histogram1d, Histogram2d};

/// Thermal drive of the resonator before conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Standard deviation of each quadrature, i.e. the Rayleigh scale of the norm.
    pub sigma: f64,
    pub unit: Unit,
    pub seed: u64,
}

impl DriveConfig {
    pub fn new(sigma: f64, unit: Unit, seed: u64) -> Result<Self> {
        ensure_positive("drive sigma", sigma)?;
        Ok(Self { sigma, unit, seed })
    }

    /// Thermal occupation with the same position variance, for a drive in
    /// quantum-noise units: `sigma^2 = (1 + 2 nbar) / 2`. Drives narrower
    /// than the ground state have none.
    pub fn equivalent_nbar(&self) -> Result<f64> {
        if self.unit != Unit::QuantumNoise {
            return Err(Error::Config(format!(
                "equivalent occupation needs a drive in quantum-noise units, got {}",
                self.unit
            )));
        }
        let nbar = self.sigma * self.sigma - 0.5;
        if nbar < 0.0 {
            return Err(Error::Domain(format!(
                "drive sigma {} is below the ground-state spread 1/sqrt(2)",
                self.sigma
            )));
        }
        Ok(nbar)
    }
}

/// One drive draw: `r ~ Rayleigh(sigma)`, `theta ~ U[0, 2 pi)`.
pub fn sample_drive<R: Rng + ?Sized>(drive: &DriveConfig, rng: &mut R) -> PhaseSpacePoint {
    let u: f64 = rng.random();
    let r = drive.sigma * (-2.0 * (-u).ln_1p()).sqrt();
    let theta = TAU * rng.random::<f64>();
    PhaseSpacePoint::new(r * theta.cos(), r * theta.sin(), drive.unit)
}

/// Probability that a drive at position `x` (quantum-noise units) heralds
/// the measurement: the filter divided by its supremum.
pub fn acceptance_probability(measurement: Measurement, cfg: &CouplingConfig, x: f64) -> f64 {
    match measurement {
        Measurement::TwoPort(ev) => {
            let half = 0.5 * (cfg.mu * x - cfg.phi);
            half.cos().powi(2 * ev.m as i32) * half.sin().powi(2 * ev.n as i32)
        }
        Measurement::Noon(n) => 0.25 * multiport::filter_n_shape(n, cfg, x),
    }
}

/// Rejection step for a two-port click pattern.
pub fn click_accept<R: Rng + ?Sized>(event: ClickEvent, cfg: &CouplingConfig, x: f64, rng: &mut R) -> bool {
    let prob = acceptance_probability(Measurement::TwoPort(event), cfg, x);
    prob >= 1.0 || rng.random::<f64>() < prob
}

/// Tuning of [`run_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub batch_size: usize,
    /// Batches per wave. Part of the reproducibility contract: changing it
    /// does not change the output, but it bounds overshoot past the target.
    pub wave: usize,
    /// Attempts after which a near-zero acceptance rate is reported.
    pub max_attempts: u64,
    /// Needed when the drive is not in quantum-noise units.
    pub constants: Option<MechanicalConstants>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { batch_size: 4096, wave: 32, max_attempts: 100_000_000, constants: None }
    }
}

/// Points kept by the rejection sampler for one measurement outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedEnsemble {
    pub measurement: Measurement,
    pub points: Vec<PhaseSpacePoint>,
    pub attempts: u64,
    pub acceptance_rate: f64,
}

impl ConditionedEnsemble {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.x).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.p).collect()
    }

    /// Binomial standard error of the acceptance rate.
    pub fn acceptance_stderr(&self) -> f64 {
        let r = self.acceptance_rate;
        (r * (1.0 - r) / self.attempts as f64).sqrt()
    }

    /// `x,p` rows preceded by `#` comment lines.
    pub fn write_csv<W: Write>(&self, comments: &[String], mut out: W) -> io::Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "x,p")?;
        for pt in &self.points {
            writeln!(out, "{:.16e},{:.16e}", pt.x, pt.p)?;
        }
        Ok(())
    }
}

struct Batch {
    // (attempt index within the batch, point)
    kept: Vec<(usize, PhaseSpacePoint)>,
}

fn run_batch(index: u64, measurement: Measurement, cfg: &CouplingConfig, drive: &DriveConfig, to_qn: f64, size: usize) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(drive.seed);
    rng.set_stream(index);
    let mut kept = Vec::new();
    for attempt in 0..size {
        let pt = sample_drive(drive, &mut rng);
        let prob = acceptance_probability(measurement, cfg, pt.x * to_qn);
        if rng.random::<f64>() < prob {
            kept.push((attempt, pt));
        }
    }
    Batch { kept }
}

/// Draws until `target` points are accepted.
///
/// `attempts` counts draws up to and including the last kept one, so the
/// acceptance rate is an unbiased estimate of the heralding probability
/// divided by the filter supremum.
pub fn run_ensemble(
    measurement: Measurement,
    cfg: &CouplingConfig,
    drive: &DriveConfig,
    target: usize,
    opts: &EnsembleOptions,
) -> Result<ConditionedEnsemble> {
    if target == 0 {
        return Err(Error::Domain("target number of accepted points must be at least 1".into()));
    }
    ensure_positive("drive sigma", drive.sigma)?;
    if opts.batch_size == 0 || opts.wave == 0 {
        return Err(Error::Domain("batch size and wave width must be positive".into()));
    }
    let to_qn = conversion_factor(drive.unit, Unit::QuantumNoise, opts.constants.as_ref())?;
    check_outcome_possible(measurement, cfg, drive, to_qn)?;

    let mut points = Vec::with_capacity(target);
    let mut attempts: u64 = 0;
    let mut next_batch: u64 = 0;
    while points.len() < target {
        let wave: Vec<Batch> = (next_batch..next_batch + opts.wave as u64)
            .into_par_iter()
            .map(|b| run_batch(b, measurement, cfg, drive, to_qn, opts.batch_size))
            .collect();
        next_batch += opts.wave as u64;
        for batch in wave {
            let need = target - points.len();
            if batch.kept.len() >= need {
                let (last, _) = batch.kept[need - 1];
                points.extend(batch.kept.into_iter().take(need).map(|(_, pt)| pt));
                attempts += last as u64 + 1;
                break;
            }
            points.extend(batch.kept.into_iter().map(|(_, pt)| pt));
            attempts += opts.batch_size as u64;
        }
        if points.len() < target && attempts >= opts.max_attempts && (points.len() as f64) < 1e-9 * attempts as f64 {
            return Err(Error::Starvation { accepted: points.len(), attempts });
        }
    }
    let acceptance_rate = points.len() as f64 / attempts as f64;
    Ok(ConditionedEnsemble { measurement, points, attempts, acceptance_rate })
}

// Outcomes with vanishing probability would otherwise spin until the
// starvation limit.
fn check_outcome_possible(measurement: Measurement, cfg: &CouplingConfig, drive: &DriveConfig, to_qn: f64) -> Result<()> {
    let photons = match measurement {
        Measurement::TwoPort(ev) => ev.photons() as usize,
        Measurement::Noon(n) => {
            multiport::multiport_matrix(n)?;
            n
        }
    };
    let sigma_qn = drive.sigma * to_qn;
    let nbar = (sigma_qn * sigma_qn - 0.5).max(0.0);
    let thermal = ThermalState::new(nbar)?;
    let shape = match measurement {
        Measurement::TwoPort(ev) => twoport::herald_shape(ev, cfg, &thermal)?,
        Measurement::Noon(n) => multiport::herald_n_shape(n, cfg, nbar),
    };
    if (cfg.alpha == 0.0 && photons > 0) || shape <= 0.0 {
        return Err(Error::Conditioning(format!(
            "{measurement} cannot be heralded at mu={}, phi={}, alpha={}",
            cfg.mu, cfg.phi, cfg.alpha
        )));
    }
    Ok(())
}
