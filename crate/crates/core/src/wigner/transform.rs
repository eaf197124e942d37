use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{linspace, symmetric_grid, ConditionalState, DensityKernel};
use crate::error::{Error, Result};

// |K| allowed on the edge of the kernel grid.
const BOUNDARY_TOLERANCE: f64 = 1e-12;
// Largest imaginary part tolerated in the transform.
const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// Wigner function sampled on a rectangular grid, row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid_x: Vec<f64>,
    pub grid_p: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn nx(&self) -> usize {
        self.grid_x.len()
    }

    pub fn np(&self) -> usize {
        self.grid_p.len()
    }

    pub fn dx(&self) -> f64 {
        self.grid_x[1] - self.grid_x[0]
    }

    pub fn dp(&self) -> f64 {
        self.grid_p[1] - self.grid_p[0]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np() + j]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx() * self.dp()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Position distribution `Int W dp`, one value per `grid_x` point.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values.chunks(self.np()).map(|row| row.iter().sum::<f64>() * dp).collect()
    }

    /// Momentum distribution `Int W dx`, one value per `grid_p` point.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut out = vec![0.0; self.np()];
        for row in self.values.chunks(self.np()) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
        out.iter_mut().for_each(|o| *o *= dx);
        out
    }
}

/// Grid extents and resolution for a Wigner computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_half: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    /// Default grid for a conditional state: `x` covers +-11.5 standard
    /// deviations, `p` covers both the unkicked and the fully kicked
    /// component to 7 standard deviations. `nx` is raised above the request
    /// when needed to keep the `y` quadrature free of aliasing and to put at
    /// least 16 points on each fringe.
    pub fn for_state(state: &ConditionalState, nx: usize, np: usize) -> Self {
        let sigma = state.thermal.position_std();
        let v = state.thermal.spread();
        let kick = state.max_kick();
        let x_half = 11.5 * sigma;
        let p_min = -7.0 * sigma;
        let p_max = kick + 7.0 * sigma;
        let p_abs = p_min.abs().max(p_max.abs());
        let mut dx_max = TAU / (2.0 * p_abs + kick + (4.0 * v * 35.0).sqrt());
        if kick > 0.0 {
            dx_max = dx_max.min(TAU / kick / 16.0);
        }
        let needed = (2.0 * x_half / dx_max).ceil() as usize + 1;
        Self { x_half, nx: nx.max(needed), p_min, p_max, np }
    }

    pub fn grid_x(&self) -> Vec<f64> {
        symmetric_grid(self.x_half, self.nx)
    }

    pub fn grid_p(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.np)
    }
}

/// `W(x, p) = (1 / pi) Int dy e^{2ipy} K(x - y, x + y)` on the kernel's
/// position grid, using the grid spacing as the `y` step.
pub fn wigner_transform(kernel: &DensityKernel, grid_p: &[f64]) -> Result<WignerGrid> {
    if grid_p.len() < 2 {
        return Err(Error::Resolution("momentum grid needs at least 2 points".into()));
    }
    let edge = kernel.boundary_magnitude();
    if edge >= BOUNDARY_TOLERANCE {
        return Err(Error::Resolution(format!(
            "kernel is {edge:e} on the grid boundary; widen the position grid"
        )));
    }
    let dx = kernel.spacing();
    let p_abs = grid_p.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    if 2.0 * p_abs * dx >= PI {
        return Err(Error::Resolution(format!(
            "position step {dx} cannot resolve e^(2ipy) at |p| = {p_abs}; refine the position grid"
        )));
    }

    let n = kernel.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let reach = i.min(n - 1 - i);
            // anti-diagonal samples K(x_i - k dx, x_i + k dx)
            let fwd: Vec<Complex64> = (0..=reach).map(|k| kernel.get(i - k, i + k)).collect();
            let bwd: Vec<Complex64> = (0..=reach).map(|k| kernel.get(i + k, i - k)).collect();
            let mut row = Vec::with_capacity(grid_p.len());
            let mut worst_imag: f64 = 0.0;
            for &p in grid_p {
                let rot = Complex64::from_polar(1.0, 2.0 * p * dx);
                let mut z = Complex64::new(1.0, 0.0);
                let mut acc = fwd[0];
                for k in 1..=reach {
                    z *= rot;
                    acc += z * fwd[k] + z.conj() * bwd[k];
                }
                let w = acc * (dx / PI);
                worst_imag = worst_imag.max(w.im.abs());
                row.push(w.re);
            }
            (row, worst_imag)
        })
        .collect();

    let worst_imag = rows.iter().fold(0.0f64, |a, (_, im)| a.max(*im));
    if worst_imag > IMAGINARY_TOLERANCE {
        return Err(Error::Resolution(format!(
            "Wigner transform has imaginary part {worst_imag:e}; kernel is not Hermitian"
        )));
    }
    let values = rows.into_iter().flat_map(|(row, _)| row).collect();
    Ok(WignerGrid { grid_x: kernel.grid_x.clone(), grid_p: grid_p.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiport::Measurement;
    use crate::twoport::ClickEvent;
    use crate::units::CouplingConfig;

    #[test]
    fn thermal_state_is_isotropic_gaussian() {
        for nbar in [0.0, 1.0] {
            let v: f64 = 1.0 + 2.0 * nbar;
            let sigma = (v / 2.0).sqrt();
            let kernel = DensityKernel::thermal(nbar, &symmetric_grid(11.5 * sigma, 301)).unwrap();
            let grid_p = linspace(-7.0 * sigma, 7.0 * sigma, 201);
            let w = wigner_transform(&kernel, &grid_p).unwrap();
            let mut worst: f64 = 0.0;
            for (i, &x) in w.grid_x.iter().enumerate() {
                for (j, &p) in w.grid_p.iter().enumerate() {
                    let exact = (-(x * x + p * p) / v).exp() / (PI * v);
                    worst = worst.max((w.get(i, j) - exact).abs());
                }
            }
            assert!(worst < 1e-10, "nbar {nbar}: {worst}");
            assert!((w.integral() - 1.0).abs() < 1e-6);
            if nbar == 0.0 {
                assert!((w.max_value() - 1.0 / PI).abs() < 1e-4);
            }
            // 2 pi Int W^2 is the purity
            let purity = TAU * w.values.iter().map(|x| x * x).sum::<f64>() * w.dx() * w.dp();
            assert!((purity - 1.0 / v).abs() < 1e-6, "nbar {nbar}: {purity}");
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let kernel = DensityKernel::thermal(0.0, &symmetric_grid(3.0, 61)).unwrap();
        assert!(matches!(wigner_transform(&kernel, &[0.0, 1.0]), Err(Error::Resolution(_))));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let kernel = DensityKernel::thermal(0.0, &symmetric_grid(10.0, 21)).unwrap();
        assert!(matches!(wigner_transform(&kernel, &[-5.0, 5.0]), Err(Error::Resolution(_))));
    }

    #[test]
    fn grid_matches_pointwise_evaluation() {
        let cfg = CouplingConfig::new(1.5, 0.0, 0.5).unwrap();
        let state = ConditionalState::new(Measurement::TwoPort(ClickEvent::new(1, 1)), &cfg, 0.5).unwrap();
        let spec = GridSpec::for_state(&state, 201, 41);
        let kernel = DensityKernel::from_fn(&spec.grid_x(), |x, xp| state.kernel(x, xp)).unwrap();
        let w = wigner_transform(&kernel, &spec.grid_p()).unwrap();
        for i in (0..w.nx()).step_by(17) {
            for j in (0..w.np()).step_by(5) {
                let direct = state.wigner_at(w.grid_x[i], w.grid_p[j]);
                assert!((w.get(i, j) - direct).abs() < 1e-10, "({i},{j})");
            }
        }
    }
}
