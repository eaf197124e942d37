//! Exact expansion of `prod_{m=0}^{N-1} (a1 + w^{-m} a2)`, `w = e^{2 pi i / N}`.
//!
//! Coefficients live in the group ring `Z[w]`, stored as integer vectors
//! indexed by the exponent of `w` mod `N`. Such a vector is zero as a complex
//! number exactly when its polynomial is divisible by the cyclotomic
//! polynomial `Phi_N`, which is how cross terms are shown to vanish without
//! floating-point cancellation.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Outcome of expanding the coincidence projector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoonProjection {
    pub ports: usize,
    /// Coefficient of `a1^N`; expected 1.
    pub a1_coefficient: Complex64,
    /// Coefficient of `a2^N`; expected `-(-1)^N`.
    pub a2_coefficient: Complex64,
    /// Largest `|coefficient|` of a mixed monomial `a1^j a2^{N-j}`, evaluated in
    /// floating point from the exact integer representation.
    pub max_cross_term: f64,
    /// Every mixed coefficient reduces to zero modulo `Phi_N`.
    pub cross_terms_vanish_exactly: bool,
}

type RingElement = Vec<i128>;

/// Expands the projector for `n >= 2` ports.
pub fn noon_projection_check(n: usize) -> Result<NoonProjection> {
    if n < 2 {
        return Err(Error::Domain(format!("N00N projection needs N >= 2, got {n}")));
    }
    // poly[j] is the coefficient of a1^{N-j} a2^j
    let zero: RingElement = vec![0; n];
    let mut poly: Vec<RingElement> = vec![zero.clone(); n + 1];
    poly[0][0] = 1;
    for m in 0..n {
        let shift = (n - m % n) % n; // exponent of w^{-m}
        let mut next = poly.clone();
        for j in 1..=n {
            for (k, &c) in poly[j - 1].iter().enumerate() {
                if c != 0 {
                    next[j][(k + shift) % n] += c;
                }
            }
        }
        poly = next;
    }

    let phi_n = cyclotomic(n);
    let mut max_cross: f64 = 0.0;
    let mut exact = true;
    for coeff in &poly[1..n] {
        max_cross = max_cross.max(evaluate(coeff, n).norm());
        exact &= reduce_mod(coeff, &phi_n).iter().all(|&c| c == 0);
    }
    Ok(NoonProjection {
        ports: n,
        a1_coefficient: evaluate(&poly[0], n),
        a2_coefficient: evaluate(&poly[n], n),
        max_cross_term: max_cross,
        cross_terms_vanish_exactly: exact,
    })
}

fn evaluate(element: &[i128], n: usize) -> Complex64 {
    element
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(k, &c)| Complex64::from_polar(c as f64, TAU * k as f64 / n as f64))
        .sum()
}

// Integer polynomials, lowest degree first.

fn trim(mut p: Vec<i128>) -> Vec<i128> {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

/// `Phi_n(x) = (x^n - 1) / prod_{d | n, d < n} Phi_d(x)`.
fn cyclotomic(n: usize) -> Vec<i128> {
    let mut p = vec![0i128; n + 1];
    p[0] = -1;
    p[n] = 1;
    for d in 1..n {
        if n % d == 0 {
            p = exact_div(&p, &cyclotomic(d));
        }
    }
    trim(p)
}

// Division by a monic divisor that is known to be exact.
fn exact_div(num: &[i128], den: &[i128]) -> Vec<i128> {
    let (quot, rem) = divmod(num, den);
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

fn reduce_mod(p: &[i128], modulus: &[i128]) -> Vec<i128> {
    divmod(p, modulus).1
}

fn divmod(num: &[i128], den: &[i128]) -> (Vec<i128>, Vec<i128>) {
    let den = trim(den.to_vec());
    let dd = den.len() - 1;
    assert_eq!(den[dd], 1, "divisor must be monic");
    let mut rem = trim(num.to_vec());
    if rem.len() <= dd {
        return (vec![0], rem);
    }
    let mut quot = vec![0i128; rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i];
        if c == 0 {
            continue;
        }
        quot[i - dd] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i - dd + j] -= c * dj;
        }
    }
    rem.truncate(dd.max(1));
    (trim(quot), rem)
}
