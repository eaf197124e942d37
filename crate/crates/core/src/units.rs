//! Physical constants, parameter derivation and the Gaussian thermal state.
//!
//! Positions are measured in *quantum-noise units* throughout the crate,
//! `X = x / x0` with `x0 = sqrt(hbar / (m omega))`, so that `[X, P] = i` and the
//! ground state has position variance 1/2. A thermal state with mean
//! occupation `nbar` has variance `(1 + 2 nbar) / 2`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Reduced Planck constant, CODATA 2018, in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Ground-state size `sqrt(hbar / (m omega))` in meters.
pub fn ground_state_size(mass_kg: f64, omega_rad_s: f64) -> Result<f64> {
    ensure_positive("mass", mass_kg)?;
    ensure_positive("angular frequency", omega_rad_s)?;
    Ok((HBAR / (mass_kg * omega_rad_s)).sqrt())
}

/// Momentum kick per photon for a single reflection, `4 pi x0 / lambda`.
pub fn coupling_single_reflection(x0_m: f64, wavelength_m: f64) -> Result<f64> {
    ensure_positive("ground-state size", x0_m)?;
    ensure_positive("wavelength", wavelength_m)?;
    Ok(4.0 * PI * x0_m / wavelength_m)
}

/// Cavity-enhanced momentum kick per photon, `4 F x0 / lambda`.
///
/// At `F = pi` this coincides with [`coupling_single_reflection`].
pub fn coupling_cavity(finesse: f64, x0_m: f64, wavelength_m: f64) -> Result<f64> {
    if !(finesse.is_finite() && finesse >= 1.0) {
        return Err(Error::Domain(format!("finesse must be >= 1, got {finesse}")));
    }
    ensure_positive("ground-state size", x0_m)?;
    ensure_positive("wavelength", wavelength_m)?;
    Ok(4.0 * finesse * x0_m / wavelength_m)
}

/// Optomechanical interaction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    /// Momentum kick per photon in quantum-noise units.
    pub mu: f64,
    /// Static interferometer phase in `[0, 2 pi)`.
    pub phi: f64,
    /// Real coherent-state amplitude in each interferometer arm.
    pub alpha: f64,
}

impl CouplingConfig {
    pub fn new(mu: f64, phi: f64, alpha: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        if !phi.is_finite() {
            return Err(Error::Domain(format!("phi must be finite, got {phi}")));
        }
        let mut phi = phi.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { mu, phi, alpha })
    }
}

/// Device constants used for unit conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalConstants {
    pub mass_kg: f64,
    pub omega_rad_s: f64,
    /// Wavelength of the state-preparation light.
    pub wavelength_m: f64,
    /// Readout-interferometer range `lambda_r / 4`.
    pub readout_range_m: f64,
}

impl MechanicalConstants {
    pub fn new(mass_kg: f64, omega_rad_s: f64, wavelength_m: f64, readout_range_m: f64) -> Result<Self> {
        ensure_positive("mass", mass_kg)?;
        ensure_positive("angular frequency", omega_rad_s)?;
        ensure_positive("wavelength", wavelength_m)?;
        ensure_positive("readout range", readout_range_m)?;
        Ok(Self { mass_kg, omega_rad_s, wavelength_m, readout_range_m })
    }

    /// The membrane device: ~100 ng, 105.64 kHz, 795 nm preparation light and a
    /// 632.8 nm readout (`lambda_r / 4 = 158.2 nm`).
    pub fn membrane() -> Self {
        Self {
            mass_kg: 1e-10,
            omega_rad_s: TAU * 105.64e3,
            wavelength_m: 795e-9,
            readout_range_m: 158.2e-9,
        }
    }

    pub fn ground_state_size(&self) -> f64 {
        (HBAR / (self.mass_kg * self.omega_rad_s)).sqrt()
    }

    pub fn coupling(&self) -> f64 {
        4.0 * PI * self.ground_state_size() / self.wavelength_m
    }
}

/// Gaussian thermal state of the mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub nbar: f64,
}

impl ThermalState {
    pub fn new(nbar: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::Domain(format!("nbar must be >= 0, got {nbar}")));
        }
        Ok(Self { nbar })
    }

    pub fn ground() -> Self {
        Self { nbar: 0.0 }
    }

    /// `1 + 2 nbar`, twice the position variance.
    pub fn spread(&self) -> f64 {
        1.0 + 2.0 * self.nbar
    }

    /// Position standard deviation, `sqrt((1 + 2 nbar) / 2)`.
    pub fn position_std(&self) -> f64 {
        (0.5 * self.spread()).sqrt()
    }

    pub fn position_pdf(&self, x: f64) -> f64 {
        thermal_position_pdf(self, x)
    }
}

/// Position distribution `exp(-x^2 / (1 + 2 nbar)) / sqrt(pi (1 + 2 nbar))`.
pub fn thermal_position_pdf(state: &ThermalState, x: f64) -> f64 {
    let v = state.spread();
    (-x * x / v).exp() / (PI * v).sqrt()
}

/// Length unit attached to a phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    /// Multiples of the ground-state size `x0`.
    QuantumNoise,
    /// Multiples of the readout range `lambda_r / 4`.
    ReadoutRange,
    /// Readout-interferometer phase, `pi` per readout range.
    Radians,
    Meters,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::QuantumNoise => "quantum-noise",
            Unit::ReadoutRange => "readout-range",
            Unit::Radians => "radians",
            Unit::Meters => "meters",
        }
    }

    // Meters per unit. Radians and readout-range need only the readout range.
    fn meters_per_unit(self, constants: &MechanicalConstants) -> f64 {
        match self {
            Unit::QuantumNoise => constants.ground_state_size(),
            Unit::ReadoutRange => constants.readout_range_m,
            Unit::Radians => constants.readout_range_m / PI,
            Unit::Meters => 1.0,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum-noise" => Ok(Unit::QuantumNoise),
            "readout-range" => Ok(Unit::ReadoutRange),
            "radians" => Ok(Unit::Radians),
            "meters" => Ok(Unit::Meters),
            other => Err(Error::Config(format!("unknown unit '{other}'"))),
        }
    }
}

/// A point in mechanical phase space with an explicit unit.
///
/// Both quadratures share the length unit: the momentum quadrature in meters
/// means `p / (m omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
    pub unit: Unit,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, p: f64, unit: Unit) -> Self {
        Self { x, p, unit }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.p)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_unit(other)?;
        Ok(Self::new(self.x + other.x, self.p + other.p, self.unit))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_unit(other)?;
        Ok(Self::new(self.x - other.x, self.p - other.p, self.unit))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.x * factor, self.p * factor, self.unit)
    }

    fn same_unit(&self, other: &Self) -> Result<()> {
        if self.unit == other.unit {
            Ok(())
        } else {
            Err(Error::Config(format!("unit mismatch: {} vs {}", self.unit, other.unit)))
        }
    }
}

/// Multiplicative factor taking values in `from` to values in `to`.
pub fn conversion_factor(from: Unit, to: Unit, constants: Option<&MechanicalConstants>) -> Result<f64> {
    use Unit::*;
    match (from, to) {
        _ if from == to => Ok(1.0),
        (Radians, ReadoutRange) => Ok(1.0 / PI),
        (ReadoutRange, Radians) => Ok(PI),
        _ => {
            let c = constants.ok_or_else(|| {
                Error::Config(format!("converting {from} to {to} needs mechanical constants"))
            })?;
            Ok(from.meters_per_unit(c) / to.meters_per_unit(c))
        }
    }
}

/// Re-expresses a point in `target` units.
pub fn convert(
    point: &PhaseSpacePoint,
    target: Unit,
    constants: Option<&MechanicalConstants>,
) -> Result<PhaseSpacePoint> {
    let f = conversion_factor(point.unit, target, constants)?;
    Ok(PhaseSpacePoint::new(point.x * f, point.p * f, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ground_state_size_examples() {
        let x0 = ground_state_size(1e-10, TAU * 105.64e3).unwrap();
        assert_relative_eq!(x0, 1.2605e-15, max_relative = 1e-3);
        assert_relative_eq!(ground_state_size(HBAR, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(ground_state_size(4.0 * HBAR, 1.0).unwrap(), 0.5, max_relative = 1e-15);
        assert!(matches!(ground_state_size(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ground_state_size(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn coupling_examples() {
        assert_relative_eq!(coupling_single_reflection(1.26e-15, 795e-9).unwrap(), 1.9917e-8, max_relative = 1e-4);
        let lam = 632.8e-9;
        assert_relative_eq!(coupling_single_reflection(lam / (4.0 * PI), lam).unwrap(), 1.0, max_relative = 1e-15);
        assert!(coupling_single_reflection(0.0, lam).is_err());

        let x0 = 1.26e-15;
        assert_relative_eq!(
            coupling_cavity(PI, x0, 795e-9).unwrap(),
            coupling_single_reflection(x0, 795e-9).unwrap(),
            max_relative = 1e-15
        );
        assert_relative_eq!(coupling_cavity(1000.0, x0, 795e-9).unwrap(), 6.3396e-6, max_relative = 1e-4);
        assert_relative_eq!(coupling_cavity(1.0, lam / 4.0, lam).unwrap(), 1.0, max_relative = 1e-15);
        assert!(matches!(coupling_cavity(0.5, x0, lam), Err(Error::Domain(_))));
    }

    #[test]
    fn coupling_config_validation() {
        let cfg = CouplingConfig::new(1.0, -PI / 2.0, 0.5).unwrap();
        assert_relative_eq!(cfg.phi, 1.5 * PI);
        assert_eq!(CouplingConfig::new(1.0, TAU, 0.5).unwrap().phi, 0.0);
        assert!(CouplingConfig::new(-1.0, 0.0, 0.5).is_err());
        assert!(CouplingConfig::new(1.0, 0.0, -0.1).is_err());
        assert!(CouplingConfig::new(1.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn thermal_pdf_values() {
        assert_relative_eq!(thermal_position_pdf(&ThermalState::ground(), 0.0), 0.564_189_583_547_756_3, max_relative = 1e-15);
        let s = ThermalState::new(4.0).unwrap();
        assert_relative_eq!(s.position_pdf(0.0), (9.0 * PI).powf(-0.5), max_relative = 1e-15);
        assert_relative_eq!(s.position_pdf(0.0), 0.1881, max_relative = 1e-3);
        assert!(ThermalState::new(-0.1).is_err());
    }

    #[test]
    fn convert_examples() {
        let c = MechanicalConstants::membrane();
        let pt = PhaseSpacePoint::new(158.2e-9, 0.0, Unit::Meters);
        let rr = convert(&pt, Unit::ReadoutRange, Some(&c)).unwrap();
        assert_relative_eq!(rr.x, 1.0, max_relative = 1e-15);
        let rad = convert(&PhaseSpacePoint::new(1.0, 0.5, Unit::ReadoutRange), Unit::Radians, None).unwrap();
        assert_relative_eq!(rad.x, PI);
        assert_relative_eq!(rad.p, PI / 2.0);
        assert_eq!(rad.unit, Unit::Radians);
        let qn = convert(&PhaseSpacePoint::new(c.ground_state_size(), 0.0, Unit::Meters), Unit::QuantumNoise, Some(&c)).unwrap();
        assert_relative_eq!(qn.x, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn convert_without_constants_is_config_error() {
        let pt = PhaseSpacePoint::new(1.0, 1.0, Unit::ReadoutRange);
        assert!(matches!(convert(&pt, Unit::Meters, None), Err(Error::Config(_))));
        assert!(matches!(convert(&pt, Unit::QuantumNoise, None), Err(Error::Config(_))));
    }

    #[test]
    fn mixed_unit_arithmetic_rejected() {
        let a = PhaseSpacePoint::new(1.0, 1.0, Unit::ReadoutRange);
        let b = PhaseSpacePoint::new(1.0, 1.0, Unit::Radians);
        assert!(a.checked_add(&b).is_err());
        assert!(a.checked_sub(&a).is_ok());
    }

    #[test]
    fn unit_names_round_trip() {
        for u in [Unit::QuantumNoise, Unit::ReadoutRange, Unit::Radians, Unit::Meters] {
            assert_eq!(u.name().parse::<Unit>().unwrap(), u);
        }
        assert!("furlongs".parse::<Unit>().is_err());
    }

    fn any_unit() -> impl Strategy<Value = Unit> {
        prop_oneof![
            Just(Unit::QuantumNoise),
            Just(Unit::ReadoutRange),
            Just(Unit::Radians),
            Just(Unit::Meters)
        ]
    }

    proptest! {
        #[test]
        fn thermal_pdf_is_even(nbar in 0.0f64..200.0, x in -50.0f64..50.0) {
            let s = ThermalState::new(nbar).unwrap();
            prop_assert_eq!(s.position_pdf(x), s.position_pdf(-x));
        }

        #[test]
        fn convert_is_invertible(x in -1e3f64..1e3, p in -1e3f64..1e3, from in any_unit(), to in any_unit()) {
            let c = MechanicalConstants::membrane();
            let pt = PhaseSpacePoint::new(x, p, from);
            let there = convert(&pt, to, Some(&c)).unwrap();
            let back = convert(&there, from, Some(&c)).unwrap();
            prop_assert!((back.x - x).abs() <= 1e-12 * x.abs().max(1e-300));
            prop_assert!((back.p - p).abs() <= 1e-12 * p.abs().max(1e-300));
            prop_assert_eq!(back.unit, from);
        }

        #[test]
        fn coupling_decreases_with_mass_and_frequency(
            m in 1e-15f64..1e-6, w in 1e2f64..1e8, k in 1.01f64..10.0
        ) {
            let lam = 795e-9;
            let base = coupling_single_reflection(ground_state_size(m, w).unwrap(), lam).unwrap();
            let heavier = coupling_single_reflection(ground_state_size(m * k, w).unwrap(), lam).unwrap();
            let faster = coupling_single_reflection(ground_state_size(m, w * k).unwrap(), lam).unwrap();
            prop_assert!(heavier < base);
            prop_assert!(faster < base);
        }
    }
}
