//! Two-degree-of-freedom chi-square tails (central and noncentral) and the
//! GLRT detection threshold built on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiSquareModel {
    Central,
    /// Noncentral with noncentrality `rho`.
    #[default]
    Noncentral,
}

/// Right tail of the central chi-square with 2 degrees of freedom.
pub fn central_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-0.5 * x).exp()
    }
}

/// Right tail of the noncentral chi-square with 2 degrees of freedom and
/// noncentrality `lambda`, as a Poisson mixture of central tails with
/// `2 + 2j` degrees of freedom.
pub fn noncentral_sf(x: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return central_sf(x);
    }
    let h = 0.5 * lambda;
    let y = 0.5 * x;
    // central tail for 2m dof: exp(-y) sum_{i<m} y^i / i!
    let mut term = (-y).exp(); // y^0/0! e^{-y}
    let mut tail = term;
    let mut weight = (-h).exp();
    let mut acc = weight * tail;
    for j in 1..100_000u32 {
        term *= y / j as f64;
        tail += term;
        weight *= h / j as f64;
        acc += weight * tail.min(1.0);
        if j as f64 > h && weight < 1e-18 {
            break;
        }
    }
    acc.clamp(0.0, 1.0)
}

pub fn sf(x: f64, model: ChiSquareModel, rho: f64) -> f64 {
    match model {
        ChiSquareModel::Central => central_sf(x),
        ChiSquareModel::Noncentral => noncentral_sf(x, rho),
    }
}

/// `x` with `sf(x) = alpha`, found by bracketing and bisection.
pub fn inverse_sf(alpha: f64, model: ChiSquareModel, rho: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("tail probability must lie in (0, 1), got {alpha}"));
    }
    if model == ChiSquareModel::Central || rho <= 0.0 {
        return Ok(-2.0 * alpha.ln());
    }
    let mut lo = 0.0;
    let mut hi = (-2.0 * alpha.ln()).max(1.0) + 2.0 * rho + 10.0;
    while sf(hi, model, rho) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sf(mid, model, rho) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold `gamma` such that the maximum of `n` independent statistics
/// exceeds it with probability `p_fa` under the selected model.
pub fn glrt_threshold(p_fa: f64, n: usize, rho: f64, model: ChiSquareModel) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return invalid(format!(
            "false-alarm probability must lie in (0, 1), got {p_fa}"
        ));
    }
    if n == 0 {
        return invalid("threshold needs at least one test");
    }
    // 1 - (1 - p_fa)^(1/n) without cancellation
    let alpha = -((-p_fa).ln_1p() / n as f64).exp_m1();
    inverse_sf(alpha, model, rho)
}
