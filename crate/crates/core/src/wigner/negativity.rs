use std::f64::consts::PI;

use super::{ConditionalState, WignerGrid};
use crate::error::{Error, Result};

/// Coupling limit of the minimum-negativity formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingRegime {
    Weak,
    Strong,
}

/// Location and value of a Wigner-function minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerMinimum {
    pub value: f64,
    pub x: f64,
    pub p: f64,
}

/// Minimum of the Wigner function of an equal-weight two-component
/// superposition kicked by `s = mu N` on a thermal state:
///
/// `-(1 / (pi v)) (1 - e^{-s^2 / (4 v)}) / (1 - e^{-s^2 v / 4})`, `v = 1 + 2 nbar`.
///
/// At `s = 0` the ratio is replaced by its limit `1 / v^2`.
pub fn min_wigner_closed(s: f64, nbar: f64) -> f64 {
    let v = 1.0 + 2.0 * nbar;
    let q = s * s / 4.0;
    if q == 0.0 {
        return -1.0 / (PI * v.powi(3));
    }
    let den = (-q * v).exp_m1();
    if den == 0.0 {
        // q v below the subnormal range: take the series ratio
        return -1.0 / (PI * v.powi(3));
    }
    -(-q / v).exp_m1() / den / (PI * v)
}

pub fn min_wigner_limits(nbar: f64, regime: CouplingRegime) -> f64 {
    let v = 1.0 + 2.0 * nbar;
    match regime {
        CouplingRegime::Weak => -1.0 / (PI * v.powi(3)),
        CouplingRegime::Strong => -1.0 / (PI * v),
    }
}

/// Grid argmin refined by a quadratic fit through the 3x3 neighbourhood.
///
/// A negative minimum sitting on the grid edge means the grid does not cover
/// the fringe region and is reported as a coverage error.
pub fn wigner_minimum_numeric(grid: &WignerGrid) -> Result<WignerMinimum> {
    let (nx, np) = (grid.nx(), grid.np());
    if nx < 3 || np < 3 {
        return Err(Error::Resolution("minimum search needs a grid of at least 3x3".into()));
    }
    let (mut bi, mut bj) = (0, 0);
    let mut best = f64::INFINITY;
    for i in 0..nx {
        for j in 0..np {
            let w = grid.get(i, j);
            if w < best {
                best = w;
                bi = i;
                bj = j;
            }
        }
    }
    let on_edge = bi == 0 || bj == 0 || bi == nx - 1 || bj == np - 1;
    if on_edge {
        if best < -1e-12 {
            return Err(Error::Coverage(format!(
                "minimum {best:e} at (x={}, p={}) lies on the grid boundary",
                grid.grid_x[bi], grid.grid_p[bj]
            )));
        }
        return Ok(WignerMinimum { value: best, x: grid.grid_x[bi], p: grid.grid_p[bj] });
    }

    let f = |di: isize, dj: isize| grid.get((bi as isize + di) as usize, (bj as isize + dj) as usize);
    // derivatives in index units
    let gx = (f(1, 0) - f(-1, 0)) / 2.0;
    let gp = (f(0, 1) - f(0, -1)) / 2.0;
    let hxx = f(1, 0) - 2.0 * best + f(-1, 0);
    let hpp = f(0, 1) - 2.0 * best + f(0, -1);
    let hxp = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / 4.0;
    let det = hxx * hpp - hxp * hxp;
    let mut result = WignerMinimum { value: best, x: grid.grid_x[bi], p: grid.grid_p[bj] };
    if hxx > 0.0 && det > 0.0 {
        let ux = -(hpp * gx - hxp * gp) / det;
        let up = -(hxx * gp - hxp * gx) / det;
        if ux.abs() <= 1.0 && up.abs() <= 1.0 {
            let value = best + gx * ux + gp * up + 0.5 * (hxx * ux * ux + 2.0 * hxp * ux * up + hpp * up * up);
            result = WignerMinimum {
                value: value.min(best),
                x: grid.grid_x[bi] + ux * grid.dx(),
                p: grid.grid_p[bj] + up * grid.dp(),
            };
        }
    }
    Ok(result)
}

/// Polishes a minimum with Newton steps on pointwise Wigner evaluations.
pub fn refine_minimum(state: &ConditionalState, start: WignerMinimum) -> WignerMinimum {
    let w = |x: f64, p: f64| state.wigner_at(x, p);
    let (mut x, mut p) = (start.x, start.p);
    let mut value = w(x, p);
    let mut h = 1e-2 * state.thermal.position_std();
    for _ in 0..40 {
        let fxp = w(x + h, p);
        let fxm = w(x - h, p);
        let fpp = w(x, p + h);
        let fpm = w(x, p - h);
        let gx = (fxp - fxm) / (2.0 * h);
        let gp = (fpp - fpm) / (2.0 * h);
        let hxx = (fxp - 2.0 * value + fxm) / (h * h);
        let hpp = (fpp - 2.0 * value + fpm) / (h * h);
        let hxp = (w(x + h, p + h) - w(x + h, p - h) - w(x - h, p + h) + w(x - h, p - h)) / (4.0 * h * h);
        let det = hxx * hpp - hxp * hxp;
        if !(hxx > 0.0 && det > 0.0) {
            break;
        }
        let dx = -(hpp * gx - hxp * gp) / det;
        let dp = -(hxx * gp - hxp * gx) / det;
        let (nx, np) = (x + dx, p + dp);
        let candidate = w(nx, np);
        if candidate > value {
            h *= 0.5;
            if h < 1e-7 {
                break;
            }
            continue;
        }
        x = nx;
        p = np;
        value = candidate;
        let step = dx.hypot(dp);
        if step < 1e-10 {
            break;
        }
        h = h.min(step.max(1e-5));
    }
    WignerMinimum { value, x, p }
}
