//! Hölder norms `C^{m̃,τ}` estimated from lattice samples.
//!
//! The seminorm estimator is a supremum of difference quotients
//! `|f(x) - f(y)| / |x - y|^τ` over lattice pairs separated by at most a
//! caller-chosen window. It is a lower bound of the true seminorm and
//! converges to it under grid refinement for the functions used here; tests
//! exercise both directions (stability for genuinely `C^τ` data, blow-up
//! under refinement when a stronger exponent is claimed).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{partial_derivative, GridFunction};
use crate::util::{multis_of_order, par_collect};

/// Estimated `C^{m̃,τ}` data of a single-component grid function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderEstimate {
    /// `sup |∂^β f|` grouped by total order `0..=m̃` (max over β of that order).
    pub sup_norms: Vec<f64>,
    /// Top-order Hölder seminorm estimate.
    pub seminorm: f64,
    /// `Σ sup_norms + seminorm` — the full norm estimate.
    pub norm: f64,
    pub smoothness: u32,
    pub exponent: f64,
    pub window: f64,
}

/// Difference-quotient seminorm of 1-D samples `vals` on a uniform lattice
/// with spacing `dx`, over log-spaced lags up to `window`.
///
/// Lags are thinned geometrically (1, 2, 3, 4, 6, 8, …) — quotients vary
/// slowly in the lag scale, so this keeps the scan `O(P log window/dx)`
/// without giving up the supremum in practice.
pub fn quotient_seminorm_1d(vals: &[Complex64], dx: f64, tau: f64, window: f64) -> f64 {
    let max_lag = ((window / dx).floor() as usize).max(1).min(vals.len() - 1);
    let lags = log_spaced_lags(max_lag);
    let sups = par_collect(lags.len(), |li| {
        let lag = lags[li];
        let denom = (lag as f64 * dx).powf(tau);
        let mut best = 0.0f64;
        for k in 0..vals.len() - lag {
            let q = (vals[k + lag] - vals[k]).norm() / denom;
            if q > best {
                best = q;
            }
        }
        best
    });
    sups.into_iter().fold(0.0, f64::max)
}

fn log_spaced_lags(max_lag: usize) -> Vec<usize> {
    let mut lags = Vec::new();
    let mut l = 1usize;
    while l <= max_lag {
        lags.push(l);
        let next = l + (l / 2).max(1);
        l = next;
    }
    lags
}

/// Estimate the `C^{m̃,τ}` norm of a single-component grid function.
///
/// Derivatives are spectral (the data must be resolved on its grid); the
/// seminorm applies to every top-order derivative. For `dim = 2` the quotient
/// sweep runs along each axis separately, which is equivalent to the full
/// two-point supremum up to a dimensional constant.
pub fn holder_norm_estimate(
    u: &GridFunction,
    smoothness: u32,
    tau: f64,
    window: f64,
) -> Result<HolderEstimate> {
    if u.components != 1 {
        return Err(Error::Shape(format!(
            "holder_norm_estimate expects 1 component, got {}",
            u.components
        )));
    }
    if !(0.0..1.0).contains(&tau) || tau == 0.0 {
        return Err(Error::Parameter(format!("tau must lie in (0,1), got {tau}")));
    }
    if window <= u.grid.spacing() {
        return Err(Error::Parameter(format!(
            "window {window} must exceed the lattice spacing {}",
            u.grid.spacing()
        )));
    }
    let dim = u.grid.dim();
    let mut sup_norms = Vec::new();
    let mut top_derivatives = Vec::new();
    for order in 0..=smoothness as usize {
        let mut level_sup = 0.0f64;
        for beta in multis_of_order(dim, order) {
            let df = if order == 0 {
                u.clone()
            } else {
                partial_derivative(u, &beta)
            };
            level_sup = level_sup.max(df.sup_norm());
            if order == smoothness as usize {
                top_derivatives.push(df);
            }
        }
        sup_norms.push(level_sup);
    }

    let mut seminorm = 0.0f64;
    let p = u.grid.points_per_axis();
    let dx = u.grid.spacing();
    for df in &top_derivatives {
        match dim {
            1 => seminorm = seminorm.max(quotient_seminorm_1d(df.component(0), dx, tau, window)),
            _ => {
                // axis-1 sweeps: rows are contiguous
                for row in df.component(0).chunks_exact(p) {
                    seminorm = seminorm.max(quotient_seminorm_1d(row, dx, tau, window));
                }
                // axis-0 sweeps: gather columns
                let vals = df.component(0);
                let mut col = vec![Complex64::new(0.0, 0.0); p];
                for c in 0..p {
                    for r in 0..p {
                        col[r] = vals[r * p + c];
                    }
                    seminorm = seminorm.max(quotient_seminorm_1d(&col, dx, tau, window));
                }
            }
        }
    }

    let norm = sup_norms.iter().sum::<f64>() + seminorm;
    Ok(HolderEstimate {
        sup_norms,
        seminorm,
        norm,
        smoothness,
        exponent: tau,
        window,
    })
}

/// Both sides of the product bound
/// `‖fg‖ ≤ Σ_{k+l=m̃} (‖f‖_{C^k}·‖g‖_{C^{l,τ}} + ‖f‖_{C^{k,τ}}·‖g‖_{C^l})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; bounded (≤ 1 for m̃ = 0) when the inequality holds.
    pub ratio: f64,
}

/// Evaluate the product inequality empirically for two grid functions.
pub fn product_norm_check(
    f: &GridFunction,
    g: &GridFunction,
    smoothness: u32,
    tau: f64,
    window: f64,
) -> Result<ProductCheck> {
    if f.grid != g.grid {
        return Err(Error::Shape("product_norm_check: grids differ".into()));
    }
    let mut fg = f.clone();
    for (a, b) in fg.values.iter_mut().zip(&g.values) {
        *a *= b;
    }
    let lhs = holder_norm_estimate(&fg, smoothness, tau, window)?.norm;
    let mut rhs = 0.0;
    for k in 0..=smoothness {
        let l = smoothness - k;
        let fk = holder_norm_estimate(f, k, tau, window)?;
        let gl = holder_norm_estimate(g, l, tau, window)?;
        let fk_sup: f64 = fk.sup_norms.iter().sum();
        let gl_sup: f64 = gl.sup_norms.iter().sum();
        rhs += fk_sup * gl.norm + fk.norm * gl_sup;
    }
    Ok(ProductCheck {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Both sides of the interpolation bound
/// `‖f‖_{C^k} ≤ C·‖f‖_∞^{1-θ}·‖f‖_{C^{m̃,τ}}^θ` with `θ = k/(m̃+τ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub theta: f64,
}

pub fn interpolation_check(
    f: &GridFunction,
    k: u32,
    smoothness: u32,
    tau: f64,
    window: f64,
) -> Result<InterpolationCheck> {
    if k == 0 || k > smoothness {
        return Err(Error::Parameter(format!(
            "interpolation order k={k} must satisfy 1 ≤ k ≤ m̃={smoothness}"
        )));
    }
    let theta = k as f64 / (smoothness as f64 + tau);
    let full = holder_norm_estimate(f, smoothness, tau, window)?;
    let ck = holder_norm_estimate(f, k, tau, window)?;
    let lhs: f64 = ck.sup_norms.iter().sum();
    let sup0 = full.sup_norms[0];
    let rhs = sup0.powf(1.0 - theta) * full.norm.powf(theta);
    Ok(InterpolationCheck {
        lhs,
        rhs,
        ratio: lhs / rhs,
        theta,
    })
}
