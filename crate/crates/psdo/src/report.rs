//! Serializable report types shared across modules, plus JSON writers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Result of fitting a power law `magnitude ≈ C·⟨ξ⟩^exponent` over dyadic
/// annuli (least squares on `log₂` of the per-annulus suprema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted exponent; `None` when every sample was exactly zero (the decay
    /// is then "−∞": any claimed order holds trivially).
    pub exponent: Option<f64>,
    /// RMS residual of the fit in `log₂` units.
    pub residual_rms: f64,
    /// Number of annuli that entered the fit.
    pub annuli_used: u32,
    /// All sampled magnitudes were zero.
    pub all_zero: bool,
}

impl DecayFit {
    /// Whether the fitted decay is at least as strong as `claimed`, within
    /// `tol`. An all-zero sample set passes any claim.
    pub fn satisfies(&self, claimed: f64, tol: f64) -> bool {
        match self.exponent {
            None => self.all_zero,
            Some(e) => e <= claimed + tol,
        }
    }
}

/// One verified inequality of a symbol-class membership check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Stable machine-readable label, e.g. `sup_decay`, `holder_decay`,
    /// `envelope`.
    pub kind: String,
    /// ξ-derivative multi-index examined.
    pub alpha: [usize; 2],
    /// x-derivative multi-index examined.
    pub beta: [usize; 2],
    /// Claimed ⟨ξ⟩-exponent for this condition.
    pub claimed_exponent: f64,
    /// Fitted decay across annuli.
    pub fit: DecayFit,
    /// Smallest constant `C` making the claimed bound hold on the samples.
    pub best_constant: f64,
    /// For envelope (vanishing-at-infinity) conditions: `(radius, sup)` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Vec<[f64; 2]>>,
    pub pass: bool,
}

/// Full report of an empirical symbol-class verification sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormReport {
    pub symbol: String,
    pub class: crate::symbol::SymbolClassSpec,
    pub dim: usize,
    pub exponent_tolerance: f64,
    pub conditions: Vec<ConditionReport>,
    pub verdict: bool,
    pub messages: Vec<String>,
}

impl SeminormReport {
    pub fn condition(&self, kind: &str, alpha: [usize; 2], beta: [usize; 2]) -> Option<&ConditionReport> {
        self.conditions
            .iter()
            .find(|c| c.kind == kind && c.alpha == alpha && c.beta == beta)
    }
}

/// Report of a mollifier sweep `ε ↦ ‖D^β J_ε f‖_∞` (or the complementary
/// `(1-J_ε)` variant) with a fitted `log₂`-slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub expected_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Write any serializable report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_fit_verdicts() {
        let fit = DecayFit {
            exponent: Some(-1.02),
            residual_rms: 0.01,
            annuli_used: 6,
            all_zero: false,
        };
        assert!(fit.satisfies(-1.0, 0.1));
        assert!(!fit.satisfies(-1.5, 0.1));
        let zero = DecayFit {
            exponent: None,
            residual_rms: 0.0,
            annuli_used: 0,
            all_zero: true,
        };
        assert!(zero.satisfies(-100.0, 0.0));
    }
}
