//! Brute-force construction of the two-port measurement operator in a
//! truncated two-mode Fock space.
//!
//! The coherent input is expanded in number states, arm 1 picks up
//! `e^{i mu j x}` for `j` photons, and the 50:50 beam splitter is applied by
//! substituting `a1^+ -> (b1^+ + b2^+) / sqrt 2`, `a2^+ -> (b1^+ - b2^+) / sqrt 2`
//! into each `a1^+^j a2^+^k |0> / sqrt(j! k!)` and expanding binomially. No
//! closed form of the operator is used.

use num_complex::Complex64;
use statrs::function::factorial::ln_factorial;

use super::ClickEvent;
use crate::error::{Error, Result};
use crate::units::CouplingConfig;

// Probability mass of the two-mode input beyond the truncation.
const MAX_TAIL_MASS: f64 = 1e-12;

/// Amplitude `<m, n| B e^{i mu a1^+ a1 x} |alpha>|alpha e^{i phi}>` computed in
/// the Fock basis with total photon number up to `truncation`.
pub fn upsilon_fock_oracle(event: ClickEvent, cfg: &CouplingConfig, x: f64, truncation: usize) -> Result<Complex64> {
    let alpha = cfg.alpha;
    let needed = event.photons() as f64 + 10.0 * alpha * alpha + 10.0;
    if (truncation as f64) < needed {
        return Err(Error::Truncation(format!(
            "truncation {truncation} below m+n+10 alpha^2+10 = {needed:.1}"
        )));
    }
    let tail = poisson_tail(2.0 * alpha * alpha, truncation);
    if tail > MAX_TAIL_MASS {
        return Err(Error::Truncation(format!("input mass beyond truncation {truncation} is {tail:e}")));
    }

    let t = truncation;
    let sqrt_fact: Vec<f64> = (0..=t).map(|k| (0.5 * ln_factorial(k as u64)).exp()).collect();
    let binom = pascal(t);

    // out[p][q]: amplitude on |p, q> after the beam splitter.
    let mut out = vec![vec![Complex64::new(0.0, 0.0); t + 1]; t + 1];
    for j in 0..=t {
        for k in 0..=(t - j) {
            let input = coherent_amplitude(alpha, j, k, cfg.phi) * Complex64::from_polar(1.0, cfg.mu * j as f64 * x);
            if input.norm() == 0.0 {
                continue;
            }
            let norm = 2f64.powf(-0.5 * (j + k) as f64) / (sqrt_fact[j] * sqrt_fact[k]);
            // (b1 + b2)^j (b1 - b2)^k = sum_r sum_s C(j,r) C(k,s) (-1)^{k-s} b1^{r+s} b2^{j+k-r-s}
            for r in 0..=j {
                for s in 0..=k {
                    let sign = if (k - s) % 2 == 0 { 1.0 } else { -1.0 };
                    let p = r + s;
                    let q = j + k - p;
                    let coef = sign * binom[j][r] * binom[k][s] * norm * sqrt_fact[p] * sqrt_fact[q];
                    out[p][q] += input * coef;
                }
            }
        }
    }
    let (m, n) = (event.m as usize, event.n as usize);
    if m + n > t {
        return Err(Error::Truncation(format!("event {event} exceeds truncation {t}")));
    }
    Ok(out[m][n])
}

// c_{jk} = e^{-alpha^2} alpha^{j+k} e^{i k phi} / sqrt(j! k!)
fn coherent_amplitude(alpha: f64, j: usize, k: usize, phi: f64) -> Complex64 {
    if alpha == 0.0 {
        return if j + k == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let ln_mag = -alpha * alpha + (j + k) as f64 * alpha.ln() - 0.5 * (ln_factorial(j as u64) + ln_factorial(k as u64));
    Complex64::from_polar(ln_mag.exp(), k as f64 * phi)
}

fn pascal(t: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=t {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for r in 1..i {
            row[r] = prev[r - 1] + prev[r];
        }
        rows.push(row);
    }
    rows
}

// P(N > t) for N ~ Poisson(mean).
fn poisson_tail(mean: f64, t: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut k = t + 1;
    loop {
        let term = (-mean + k as f64 * mean.ln() - ln_factorial(k as u64)).exp();
        tail += term;
        if term < 1e-30 * tail.max(1e-300) || k > t + 10_000 {
            return tail;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoport::upsilon;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vacuum_outcome() {
        let c = CouplingConfig::new(0.9, 1.1, 1.0).unwrap();
        let u = upsilon_fock_oracle(ClickEvent::NONE, &c, 3.3, 30).unwrap();
        assert!((u - Complex64::new((-1f64).exp(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn single_click_without_phases() {
        let c = CouplingConfig::new(0.0, 0.0, 0.5).unwrap();
        let u = upsilon_fock_oracle(ClickEvent::new(1, 0), &c, 0.3, 20).unwrap();
        assert_relative_eq!(u.re, 2f64.sqrt() * 0.5 * (-0.25f64).exp(), max_relative = 1e-12);
        assert!(u.im.abs() < 1e-14);
    }

    #[test]
    fn agrees_with_closed_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let ev = ClickEvent::new(rng.random_range(0..=2), rng.random_range(0..=2));
            let c = CouplingConfig::new(rng.random_range(0.0..3.0), rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.01..0.5)).unwrap();
            let x = rng.random_range(-5.0..5.0);
            let oracle = upsilon_fock_oracle(ev, &c, x, 20).unwrap();
            let closed = upsilon(ev, &c, x);
            assert!((oracle - closed).norm() <= 1e-8 * closed.norm(), "{ev}: {oracle} vs {closed}");
        }
    }

    #[test]
    fn rejects_small_truncation() {
        let c = CouplingConfig::new(1.0, 0.0, 2.0).unwrap();
        assert!(matches!(upsilon_fock_oracle(ClickEvent::new(1, 1), &c, 0.0, 20), Err(Error::Truncation(_))));
    }
}
