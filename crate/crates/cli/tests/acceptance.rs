//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured figure next to its tolerance, and fails if any criterion fails.
//!
//! Run with `cargo test -p mechfringe-cli --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mechfringe_core::montecarlo::stats::{count_peaks_above_half_max, dominant_frequency, ks_rayleigh, ks_two_sample};
use mechfringe_core::montecarlo::{histogram, run_ensemble, sample_drive, DriveConfig, EnsembleOptions};
use mechfringe_core::multiport::{filter_n, herald_probability_n, noon_projection_check, upsilon_n, upsilon_n_coherent_oracle};
use mechfringe_core::tracefit::{
    fit_trace, initial_guess, response_with_jacobian, synthesize_trace, FitOptions, GuessOptions, KnownParams, TraceModelParams,
    TraceTiming,
};
use mechfringe_core::twoport::{
    herald_probability_closed, herald_probability_quadrature, upsilon, upsilon_fock_oracle, ClickEvent, ConditionalPositionPdf,
};
use mechfringe_core::units::thermal_position_pdf;
use mechfringe_core::wigner::{
    min_wigner_closed, min_wigner_limits, refine_minimum, wigner_minimum_numeric, wigner_transform, ConditionalState,
    CouplingRegime, DensityKernel, GridSpec, WignerGrid,
};
use mechfringe_core::{CouplingConfig, Measurement, ThermalState, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cfg(mu: f64, phi: f64, alpha: f64) -> CouplingConfig {
    CouplingConfig::new(mu, phi, alpha).unwrap()
}

fn two_port(m: u32, n: u32) -> Measurement {
    Measurement::TwoPort(ClickEvent::new(m, n))
}

fn wigner_grid(state: &ConditionalState, n: usize) -> WignerGrid {
    let spec = GridSpec::for_state(state, n, n);
    let kernel = DensityKernel::from_fn(&spec.grid_x(), |x, xp| state.kernel(x, xp)).unwrap();
    wigner_transform(&kernel, &spec.grid_p()).unwrap()
}

fn kraus_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let ev = ClickEvent::new(rng.random_range(0..=2), rng.random_range(0..=2));
        let c = cfg(rng.random_range(0.0..3.0), rng.random_range(0.0..TAU), rng.random_range(0.0..=0.5));
        let x = rng.random_range(-5.0..5.0);
        let closed = upsilon(ev, &c, x);
        let oracle = upsilon_fock_oracle(ev, &c, x, 20).unwrap();
        let err = (oracle - closed).norm() / closed.norm();
        worst = worst.max(if closed.norm() == 0.0 { oracle.norm() } else { err });
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 10.0, format!("max relative error {worst:.2e} (<= 1e-8), {secs:.2} s (< 10 s)"))
}

fn heralding() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for mu in [0.1, 1.0, 3.0] {
        for nbar in [0.0, 1.0, 4.0] {
            for phi in [0.0, FRAC_PI_2, PI] {
                for alpha in [0.1, 0.5] {
                    let c = cfg(mu, phi, alpha);
                    let thermal = ThermalState::new(nbar).unwrap();
                    for ev in [ClickEvent::new(0, 0), ClickEvent::new(0, 1), ClickEvent::new(1, 0), ClickEvent::new(1, 1)] {
                        let closed = herald_probability_closed(ev, &c, nbar).unwrap();
                        let quad = herald_probability_quadrature(ev, &c, &thermal).unwrap();
                        worst = worst.max((closed - quad).abs());
                        points += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 5.0 && points == 216,
        format!("{} grid points x 4 events, max |closed - quadrature| {worst:.2e} (< 1e-8), {secs:.2} s (< 5 s)", points / 4),
    )
}

fn multiport() -> Outcome {
    let mut cross: f64 = 0.0;
    let mut coeff: f64 = 0.0;
    let mut exact = true;
    for n in 2..=8 {
        let p = noon_projection_check(n).unwrap();
        cross = cross.max(p.max_cross_term);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        coeff = coeff.max((p.a1_coefficient - 1.0).norm()).max((p.a2_coefficient + sign).norm());
        exact &= p.cross_terms_vanish_exactly;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut oracle_err, mut identity): (f64, f64) = (0.0, 0.0);
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let c = cfg(rng.random_range(0.0..3.0), rng.random_range(0.0..TAU), rng.random_range(0.05..0.6));
        let x = rng.random_range(-5.0..5.0);
        let a = upsilon_n(n, &c, x).unwrap();
        let b = upsilon_n_coherent_oracle(n, &c, x).unwrap();
        oracle_err = oracle_err.max((a - b).norm() / a.norm());
        identity = identity.max((upsilon_n(2, &c, x).unwrap() - upsilon(ClickEvent::new(1, 1), &c, x)).norm());
    }
    outcome(
        cross < 1e-10 && coeff < 1e-12 && exact && oracle_err <= 1e-10 && identity <= 1e-12,
        format!(
            "N=2..8 cross terms {cross:.1e} (< 1e-10, exact: {exact}), coefficient error {coeff:.1e}; oracle relative error {oracle_err:.2e} (<= 1e-10); Y_2 - Y_11 {identity:.1e} (<= 1e-12)"
        ),
    )
}

/// States with minimum at the closed form for a total kick `s`, each as an
/// equal-weight superposition with aligned reference phase.
fn aligned_state(s: f64, nbar: f64) -> ConditionalState {
    let (m, c) = if s == 0.5 {
        (two_port(0, 1), cfg(0.5, 0.0, 0.5))
    } else if s == 1.5 {
        (Measurement::Noon(3), cfg(0.5, PI, 0.5))
    } else if s == 3.0 {
        (Measurement::Noon(2), cfg(1.5, 0.0, 0.5))
    } else {
        (Measurement::Noon(3), cfg(s / 3.0, PI, 0.5))
    };
    let state = ConditionalState::new(m, &c, nbar).unwrap();
    assert!(state.closed_form_minimum_applies(1e-12));
    state
}

fn negativity() -> Outcome {
    let start = Instant::now();
    let mut ground: f64 = 0.0;
    let mut paired: f64 = 0.0;
    for s in [0.5, 1.5, 3.0, 4.5] {
        for nbar in [0.0, 0.34, 1.0, 4.0] {
            let state = aligned_state(s, nbar);
            let grid = wigner_grid(&state, 512);
            let coarse = wigner_minimum_numeric(&grid).unwrap();
            let numeric = refine_minimum(&state, coarse).value;
            paired = paired.max((numeric - min_wigner_closed(s, nbar)).abs());
            if nbar == 0.0 {
                ground = ground.max((numeric + 1.0 / PI).abs());
            }
        }
    }
    let weak = min_wigner_limits(0.34, CouplingRegime::Weak);
    let strong = min_wigner_limits(0.34, CouplingRegime::Strong);
    let weak_closed = min_wigner_closed(1e-4, 0.34);
    let strong_closed = min_wigner_closed(40.0, 0.34);
    let secs = start.elapsed().as_secs_f64();
    let ok = ground <= 1e-4
        && paired <= 1e-4
        && (weak - -0.067).abs() <= 1e-3
        && (weak_closed - weak).abs() < 1e-6
        && (strong - -0.190).abs() <= 1e-3
        && (strong_closed - strong).abs() < 1e-6
        && secs < 120.0;
    outcome(
        ok,
        format!(
            "|min W + 1/pi| at nbar=0 {ground:.1e} (<= 1e-4); nbar=0.34 weak {weak:.4} strong {strong:.4} (-0.067, -0.190 +- 1e-3); numeric vs closed over 16 states {paired:.1e} (<= 1e-4); 512^2 grids, {secs:.1} s (< 120 s)"
        ),
    )
}

fn marginals() -> Outcome {
    let states = [
        (two_port(0, 1), cfg(0.5, 0.0, 0.5), 0.0),
        (two_port(1, 0), cfg(1.5, 0.0, 0.5), 0.0),
        (two_port(1, 1), cfg(1.0, FRAC_PI_2, 0.5), 0.34),
        (two_port(2, 1), cfg(0.7, 2.1, 0.5), 1.0),
        (Measurement::Noon(3), cfg(0.5, 0.4, 0.5), 4.0),
        (Measurement::Noon(4), cfg(0.8, 1.0, 0.5), 0.34),
    ];
    let mut worst: f64 = 0.0;
    for (m, c, nbar) in &states {
        let state = ConditionalState::new(*m, c, *nbar).unwrap();
        let grid = wigner_grid(&state, 256);
        let thermal = ThermalState::new(*nbar).unwrap();
        let pdf: Box<dyn Fn(f64) -> f64> = match m {
            Measurement::TwoPort(ev) => {
                let p = ConditionalPositionPdf::new(*ev, c, &thermal).unwrap();
                Box::new(move |x| p.density(x))
            }
            Measurement::Noon(n) => {
                let h = herald_probability_n(*n, c, *nbar).unwrap();
                let (n, c) = (*n, *c);
                Box::new(move |x| filter_n(n, &c, x).unwrap() * thermal_position_pdf(&thermal, x) / h)
            }
        };
        let dev = grid.grid_x.iter().zip(grid.x_marginal()).map(|(&x, mx)| (mx - pdf(x)).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    outcome(worst <= 1e-5, format!("6 states, max |Int W dp - pdf| {worst:.1e} (<= 1e-5)"))
}

fn super_resolution() -> Outcome {
    let start = Instant::now();
    let c = cfg(1.0, FRAC_PI_2, 0.5);
    let sigma = PI;
    let freq = |ev: ClickEvent, seed: u64| {
        let drive = DriveConfig::new(sigma, Unit::QuantumNoise, seed).unwrap();
        let ens = run_ensemble(Measurement::TwoPort(ev), &c, &drive, 100_000, &EnsembleOptions::default()).unwrap();
        let h = histogram(&ens, 200, (-2.5 * sigma, 2.5 * sigma)).unwrap();
        // divide out the Gaussian drive envelope to leave the fringe pattern
        let centers = h.x.centers();
        let envelope: Vec<f64> = centers.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let ratio: Vec<f64> = h.x.density.iter().zip(&envelope).map(|(d, e)| d / e).collect();
        let f = dominant_frequency(&centers, &ratio, &envelope, 0.05, 1.0, 2000).unwrap();
        (f, ens)
    };
    let (f10, _) = freq(ClickEvent::new(1, 0), 61);
    let (f11, ens11) = freq(ClickEvent::new(1, 1), 62);
    let ratio = f11 / f10;
    let wide = histogram(&ens11, 100, (-4.0 * sigma, 4.0 * sigma)).unwrap();
    let peaks = count_peaks_above_half_max(&wide.x.density);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (ratio / 2.0 - 1.0).abs() < 0.05 && peaks == 3 && secs < 30.0,
        format!(
            "f{{1,1}} = {f11:.4}, f{{1,0}} = {f10:.4} cycles/x0, ratio {ratio:.4} (2 +- 5%); {peaks} maxima above half-max (3); n = 1e5, {secs:.1} s (< 30 s)"
        ),
    )
}

fn momentum() -> Outcome {
    let c = cfg(1.0, FRAC_PI_2, 0.5);
    let sigma = PI;
    let reference_drive = DriveConfig::new(sigma, Unit::QuantumNoise, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let reference: Vec<f64> = (0..100_000).map(|_| sample_drive(&reference_drive, &mut rng).p).collect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, ev) in [ClickEvent::new(0, 0), ClickEvent::new(0, 1), ClickEvent::new(1, 0), ClickEvent::new(1, 1)].iter().enumerate() {
        let drive = DriveConfig::new(sigma, Unit::QuantumNoise, 71 + k as u64).unwrap();
        let ens = run_ensemble(Measurement::TwoPort(*ev), &c, &drive, 10_000, &EnsembleOptions::default()).unwrap();
        let d = ks_two_sample(&ens.ps(), &reference);
        parts.push(format!("{ev} {d:.4}"));
        worst = worst.max(d);
    }
    outcome(worst < 0.02, format!("KS distance of P vs unconditioned drive (n = 1e4 vs 1e5): {} (< 0.02)", parts.join(", ")))
}

fn small_mu() -> Outcome {
    let pdf = ConditionalPositionPdf::new(ClickEvent::new(0, 1), &cfg(0.01, 0.0, 0.5), &ThermalState::ground()).unwrap();
    let worst = (0..=12_000)
        .map(|k| -6.0 + k as f64 * 1e-3)
        .map(|x| (pdf.density(x) - 2.0 / PI.sqrt() * x * x * (-x * x).exp()).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-4, format!("max |pdf - 2 x^2 e^(-x^2) / sqrt(pi)| on [-6, 6]: {worst:.2e} (<= 1e-4)"))
}

fn mirror_error(fit: &TraceModelParams, truth: &TraceModelParams) -> f64 {
    let direct = (fit.x - truth.x).abs().max((fit.p - truth.p).abs());
    let mirrored = (fit.x + truth.x).abs().max((fit.p + truth.p).abs());
    direct.min(mirrored)
}

fn trace_fits() -> Outcome {
    let start = Instant::now();
    let base = TraceModelParams { a: 1.0, c: 0.0, omega_m: TAU * 105.64e3, x: 0.0, p: 0.0, phi_r: 0.0, d: 0.1, offset_modulated: true };
    let known = KnownParams::from(&base);
    let timing = TraceTiming::default();
    let fit = |truth: &TraceModelParams, noise: f64, rng: &mut ChaCha8Rng| {
        let trace = synthesize_trace(truth, noise, &timing, rng).unwrap();
        let guess = initial_guess(&trace, &known, &GuessOptions::default()).unwrap();
        fit_trace(&trace, &known, &guess, &FitOptions::default()).unwrap().params
    };

    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut zero_noise: f64 = 0.0;
    for _ in 0..20 {
        let r = 3.2 * PI * rng.random::<f64>().sqrt();
        let theta = rng.random_range(0.0..TAU);
        let truth = TraceModelParams { x: r * theta.cos(), p: r * theta.sin(), phi_r: rng.random_range(0.0..TAU), ..base };
        zero_noise = zero_noise.max(mirror_error(&fit(&truth, 0.0, &mut rng), &truth));
    }

    let drive = DriveConfig::new(0.74 * PI, Unit::Radians, 0).unwrap();
    let mut good = 0;
    for run in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let pt = sample_drive(&drive, &mut rng);
        let truth = TraceModelParams { x: pt.x, p: pt.p, phi_r: rng.random_range(0.0..TAU), ..base };
        if mirror_error(&fit(&truth, 0.01, &mut rng), &truth) < 0.02 {
            good += 1;
        }
    }

    let mut jac: f64 = 0.0;
    for _ in 0..200 {
        let p = TraceModelParams {
            x: rng.random_range(-8.0..8.0),
            p: rng.random_range(-8.0..8.0),
            phi_r: rng.random_range(0.0..TAU),
            d: rng.random_range(0.0..0.9),
            ..base
        };
        let t = rng.random_range(-25e-6..25e-6);
        let (_, analytic) = response_with_jacobian(&p, t);
        let mut numeric = [0.0; 4];
        let h = 1e-6;
        for (k, slot) in numeric.iter_mut().enumerate() {
            let shifted = |delta: f64| {
                let mut q = p;
                match k {
                    0 => q.x += delta,
                    1 => q.p += delta,
                    2 => q.phi_r += delta,
                    _ => q.d += delta,
                }
                response_with_jacobian(&q, t).0
            };
            *slot = (shifted(h) - shifted(-h)) / (2.0 * h);
        }
        let norm = analytic.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        jac = jac.max(diff / norm);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        zero_noise <= 1e-6 && good >= 95 && jac <= 1e-5 && secs < 60.0,
        format!(
            "zero noise max |dX|,|dP| {zero_noise:.1e} rad (<= 1e-6); 1% noise {good}/100 within 0.02 rad (>= 95); Jacobian vs finite differences {jac:.1e} (<= 1e-5); {secs:.1} s (< 60 s)"
        ),
    )
}

fn drive_statistics() -> Outcome {
    let sigma = 0.727;
    let n = 100_000;
    let drive = DriveConfig::new(sigma, Unit::ReadoutRange, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let pts: Vec<_> = (0..n).map(|_| sample_drive(&drive, &mut rng)).collect();
    let std = |v: Vec<f64>| {
        let mean = v.iter().sum::<f64>() / n as f64;
        (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let sx = std(pts.iter().map(|p| p.x).collect());
    let sp = std(pts.iter().map(|p| p.p).collect());
    let bound = 3.0 * sigma / (n as f64).sqrt();
    let ks = ks_rayleigh(&pts.iter().map(|p| p.norm()).collect::<Vec<_>>(), sigma);
    outcome(
        (sx - sigma).abs() < bound && (sp - sigma).abs() < bound && ks < 0.01,
        format!("std X {sx:.5}, P {sp:.5} vs 0.727 +- {bound:.5}; Rayleigh KS {ks:.4} (< 0.01), n = 1e5"),
    )
}

fn run_twice(verb: &str, dir: &Path) -> Result<usize, String> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{verb}.toml"));
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.join(format!("{verb}-{k}"))).collect();
    for out in &outs {
        let status = Command::new(env!("CARGO_BIN_EXE_mechfringe"))
            .args([verb, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"])
            .args(["--seed", "8675309"])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("{verb} exited with {status}"));
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        if std::fs::read(outs[0].join(name)).unwrap() != std::fs::read(outs[1].join(name)).map_err(|e| e.to_string())? {
            return Err(format!("{verb}: {} differs", name.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = 0;
    for verb in ["sample", "synthfit"] {
        match run_twice(verb, tmp.path()) {
            Ok(n) => files += n,
            Err(e) => return outcome(false, e),
        }
    }
    outcome(true, format!("sample and synthfit rerun with --threads 1: {files} files byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Kraus-oracle equivalence", kraus_oracle),
        ("heralding closed forms", heralding),
        ("multiport projection", multiport),
        ("Wigner negativity", negativity),
        ("marginal consistency", marginals),
        ("fringe super-resolution", super_resolution),
        ("momentum invariance", momentum),
        ("small-mu Fock form", small_mu),
        ("trace-fit round trip", trace_fits),
        ("drive statistics", drive_statistics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        println!("criterion {:>2} {} {name}: {}", k + 1, if result.pass { "PASS" } else { "FAIL" }, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
