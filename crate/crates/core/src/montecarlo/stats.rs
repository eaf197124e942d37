//! Goodness-of-fit and fringe analysis used to validate sampled ensembles.

use nalgebra::{Matrix3, Vector3};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &s)| {
        let c = cdf(s);
        d.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n)
    })
}

/// KS distance to `Rayleigh(sigma)`, CDF `1 - exp(-r^2 / (2 sigma^2))`.
pub fn ks_rayleigh(norms: &[f64], sigma: f64) -> f64 {
    ks_one_sample(norms, |r| -(-r * r / (2.0 * sigma * sigma)).exp_m1())
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of binned counts against bin probabilities.
///
/// Probabilities are renormalized over the bins, and adjacent bins are pooled
/// until each expects at least 5 counts.
pub fn chi_squared_test(counts: &[u64], probabilities: &[f64]) -> Result<ChiSquaredTest> {
    if counts.len() != probabilities.len() {
        return Err(Error::Domain("counts and probabilities differ in length".into()));
    }
    let total: u64 = counts.iter().sum();
    let mass: f64 = probabilities.iter().sum();
    if total == 0 || !(mass > 0.0) {
        return Err(Error::Empty("chi-squared test needs counts and positive probability".into()));
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probabilities) {
        obs += c as f64;
        exp += p / mass * total as f64;
        if exp >= 5.0 {
            pooled.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => pooled.push((obs, exp)),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::Empty("too few populated bins for a chi-squared test".into()));
    }
    let statistic = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquaredTest { statistic, dof, p_value: dist.sf(statistic) })
}

/// Frequency (cycles per unit of `xs`) of the sinusoid that best explains
/// `ys` in weighted least squares, searched over `[f_lo, f_hi]`.
///
/// For every trial frequency the model `a + b cos(2 pi f x) + c sin(2 pi f x)`
/// is fitted and the explained weighted sum of squares is recorded; the best
/// grid point is refined by a parabola through its neighbours. Unlike a plain
/// DFT peak this stays unbiased when the record holds only a few periods.
pub fn dominant_frequency(xs: &[f64], ys: &[f64], weights: &[f64], f_lo: f64, f_hi: f64, n_trials: usize) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() != weights.len() {
        return Err(Error::Domain("frequency search inputs differ in length".into()));
    }
    if xs.len() < 4 || n_trials < 3 || !(f_hi > f_lo && f_lo >= 0.0) {
        return Err(Error::Domain("frequency search needs 4 samples, 3 trials and 0 <= f_lo < f_hi".into()));
    }
    let wsum: f64 = weights.iter().sum();
    let ybar = weights.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let baseline: f64 = weights.iter().zip(ys).map(|(w, y)| w * (y - ybar).powi(2)).sum();
    let power = |f: f64| -> f64 {
        let mut ata = Matrix3::zeros();
        let mut aty = Vector3::zeros();
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            let (s, c) = (std::f64::consts::TAU * f * x).sin_cos();
            let row = Vector3::new(1.0, c, s);
            ata += w * row * row.transpose();
            aty += w * y * row;
        }
        match ata.cholesky() {
            Some(ch) => {
                let beta = ch.solve(&aty);
                let rss: f64 = xs
                    .iter()
                    .zip(ys)
                    .zip(weights)
                    .map(|((&x, &y), &w)| {
                        let (s, c) = (std::f64::consts::TAU * f * x).sin_cos();
                        w * (y - beta[0] - beta[1] * c - beta[2] * s).powi(2)
                    })
                    .sum();
                baseline - rss
            }
            None => 0.0,
        }
    };
    let step = (f_hi - f_lo) / (n_trials - 1) as f64;
    let scores: Vec<f64> = (0..n_trials).map(|k| power(f_lo + step * k as f64)).collect();
    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("at least three trials");
    let mut f = f_lo + step * best as f64;
    if best > 0 && best + 1 < n_trials {
        let (a, b, c) = (scores[best - 1], scores[best], scores[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            f += 0.5 * step * (a - c) / denom;
        }
    }
    Ok(f)
}

/// Number of contiguous runs of `values` strictly above half their maximum.
pub fn count_peaks_above_half_max(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return 0;
    }
    let threshold = 0.5 * max;
    let mut runs = 0;
    let mut inside = false;
    for &v in values {
        if v > threshold && !inside {
            runs += 1;
        }
        inside = v > threshold;
    }
    runs
}
