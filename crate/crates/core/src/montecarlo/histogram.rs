use serde::Serialize;

use super::ConditionedEnsemble;
use crate::error::{Error, Result};

/// Density-normalized histogram over equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram1d {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    /// Samples that fell outside the binned range.
    pub outside: u64,
}

impl Histogram1d {
    pub fn new(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Self> {
        check_bins(n_bins, range)?;
        let (lo, hi) = range;
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0u64; n_bins];
        let mut outside = 0;
        for &s in samples {
            match bin_index(s, lo, hi, n_bins) {
                Some(k) => counts[k] += 1,
                None => outside += 1,
            }
        }
        let inside: u64 = counts.iter().sum();
        if inside == 0 {
            return Err(Error::Empty("no samples fall inside the histogram range".into()));
        }
        let density = counts.iter().map(|&c| c as f64 / (inside as f64 * width)).collect();
        let edges = (0..=n_bins).map(|k| lo + width * k as f64).collect();
        Ok(Self { edges, counts, density, outside })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// `sum density * width`; one up to rounding.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width()
    }
}

/// Joint histogram, `density[i * ny + j]` for x bin `i` and p bin `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram2d {
    pub x_edges: Vec<f64>,
    pub p_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub outside: u64,
}

impl Histogram2d {
    pub fn mass(&self) -> f64 {
        let wx = self.x_edges[1] - self.x_edges[0];
        let wp = self.p_edges[1] - self.p_edges[0];
        self.density.iter().sum::<f64>() * wx * wp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleHistograms {
    pub x: Histogram1d,
    pub p: Histogram1d,
    pub joint: Histogram2d,
}

/// Marginal and joint histograms of an ensemble over the same square range.
pub fn histogram(ensemble: &ConditionedEnsemble, n_bins: usize, range: (f64, f64)) -> Result<EnsembleHistograms> {
    if ensemble.points.is_empty() {
        return Err(Error::Empty("ensemble has no points".into()));
    }
    let xs = ensemble.xs();
    let ps = ensemble.ps();
    let x = Histogram1d::new(&xs, n_bins, range)?;
    let p = Histogram1d::new(&ps, n_bins, range)?;

    let (lo, hi) = range;
    let mut counts = vec![0u64; n_bins * n_bins];
    let mut outside = 0;
    for (&a, &b) in xs.iter().zip(&ps) {
        match (bin_index(a, lo, hi, n_bins), bin_index(b, lo, hi, n_bins)) {
            (Some(i), Some(j)) => counts[i * n_bins + j] += 1,
            _ => outside += 1,
        }
    }
    let inside: u64 = counts.iter().sum();
    if inside == 0 {
        return Err(Error::Empty("no points fall inside the joint histogram range".into()));
    }
    let area = x.width() * x.width();
    let joint = Histogram2d {
        x_edges: x.edges.clone(),
        p_edges: x.edges.clone(),
        density: counts.iter().map(|&c| c as f64 / (inside as f64 * area)).collect(),
        outside,
    };
    Ok(EnsembleHistograms { x, p, joint })
}

/// Probability mass of `pdf` in each bin, by 5-point Gauss-Legendre per bin.
pub fn bin_probabilities<F: Fn(f64) -> f64>(edges: &[f64], pdf: F) -> Vec<f64> {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [0.568_888_888_888_889, 0.478_628_670_499_366, 0.478_628_670_499_366, 0.236_926_885_056_189, 0.236_926_885_056_189];
    edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            half * NODES.iter().zip(&WEIGHTS).map(|(t, wt)| wt * pdf(mid + half * t)).sum::<f64>()
        })
        .collect()
}

fn check_bins(n_bins: usize, (lo, hi): (f64, f64)) -> Result<()> {
    if n_bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Domain(format!("invalid histogram range [{lo}, {hi}]")));
    }
    Ok(())
}

fn bin_index(v: f64, lo: f64, hi: f64, n_bins: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let k = ((v - lo) / (hi - lo) * n_bins as f64) as usize;
    Some(k.min(n_bins - 1))
}
