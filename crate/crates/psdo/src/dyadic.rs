//! Dyadic frequency decompositions: the radial cutoffs `φ`, `ψ₀`, the annular
//! pieces `ψ_j`, and the frequency mollifier `J_ε = φ(εD)`.
//!
//! The annular pieces use the telescoping convention
//!
//! ```text
//! ψ_j(ξ) = ψ₀(2^{-j}ξ) - ψ₀(2^{-j+1}ξ)   (j ≥ 1),   ψ_0 = ψ₀,
//! ```
//!
//! so that `Σ_{j≤J} ψ_j(ξ) = ψ₀(2^{-J}ξ)`, which equals 1 wherever
//! `|ξ| ≤ 2^J`. Each `ψ_j` (j ≥ 1) is supported in the annulus
//! `2^{j-1} ≤ |ξ| ≤ 2^{j+1}`, and at any point at most 3 pieces are nonzero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bracket, Grid, GridFunction};
use crate::report::SweepReport;
use crate::util::{
    i_pow, linear_fit, multi_order, norm, quintic_step, quintic_step_deriv, smooth_step,
    smooth_step_deriv, Multi,
};

/// Radial transition shape for the cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `C^∞` step built from `e^{-1/t}` (default).
    ExpBump,
    /// `C^2` quintic smoothstep; cheaper, with documented reduced smoothness.
    PolyBump,
}

/// The pair `(φ, ψ₀)` of radial profiles: both equal 1 on `|ξ| ≤ 1` and
/// vanish on `|ξ| ≥ 2`, descending monotonically in between.
#[derive(Debug, Clone, Copy)]
pub struct CutoffPair {
    pub profile: CutoffProfile,
}

impl CutoffPair {
    pub fn new(profile: CutoffProfile) -> Self {
        CutoffPair { profile }
    }

    /// Radial value of `φ` (and `ψ₀`; the pair shares one shape).
    pub fn phi_radial(&self, r: f64) -> f64 {
        let u = 2.0 - r.abs();
        match self.profile {
            CutoffProfile::ExpBump => smooth_step(u),
            CutoffProfile::PolyBump => quintic_step(u),
        }
    }

    /// First radial derivative of `φ`.
    pub fn phi_radial_deriv(&self, r: f64) -> f64 {
        let u = 2.0 - r.abs();
        let s = match self.profile {
            CutoffProfile::ExpBump => smooth_step_deriv(u),
            CutoffProfile::PolyBump => quintic_step_deriv(u),
        };
        -s * r.signum()
    }

    /// Radial derivative of order `0..=4` (orders ≥ 2 by nested central
    /// differences of the exact first derivative).
    pub fn phi_radial_deriv_n(&self, order: usize, r: f64) -> f64 {
        match order {
            0 => self.phi_radial(r),
            1 => self.phi_radial_deriv(r),
            n => {
                assert!(n <= 4, "radial derivatives supported up to order 4");
                let h = 1e-3;
                (self.phi_radial_deriv_n(n - 1, r + h) - self.phi_radial_deriv_n(n - 1, r - h))
                    / (2.0 * h)
            }
        }
    }

    /// `φ(|ξ|)` at a frequency point.
    pub fn phi(&self, xi: &[f64]) -> f64 {
        self.phi_radial(norm(xi))
    }

    /// `ψ₀(|ξ|)` (same shape as `φ`).
    pub fn psi0(&self, xi: &[f64]) -> f64 {
        self.phi_radial(norm(xi))
    }

    /// `ψ_j(r)` without a band-index cap: the full locally finite family,
    /// whose sum telescopes to exactly 1 at every radius.
    pub fn band_radial(&self, j: u32, r: f64) -> f64 {
        if j == 0 {
            self.phi_radial(r)
        } else {
            let s = 2f64.powi(-(j as i32));
            self.phi_radial(s * r) - self.phi_radial(2.0 * s * r)
        }
    }

    /// The (at most 3) bands with `ψ_j(r) ≠ 0`, with their weights; the
    /// weights sum to 1 for every `r ≥ 0`.
    pub fn bands_at(&self, r: f64) -> Vec<(u32, f64)> {
        let j_hi = if r <= 2.0 {
            2
        } else {
            r.log2().ceil() as u32 + 1
        };
        let j_lo = j_hi.saturating_sub(3);
        (j_lo..=j_hi)
            .filter_map(|j| {
                let w = self.band_radial(j, r);
                (w.abs() > 1e-15).then_some((j, w))
            })
            .collect()
    }
}

impl Default for CutoffPair {
    fn default() -> Self {
        CutoffPair::new(CutoffProfile::ExpBump)
    }
}

/// A dyadic partition `{ψ_j}_{j ≤ J}` with smoothing scales `ε_j = 2^{-jγ}`.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    pub cutoffs: CutoffPair,
    pub j_max: u32,
    /// Smoothing exponent γ; must lie strictly between the class parameters
    /// δ and ρ when used for symbol smoothing.
    pub gamma: f64,
}

impl DyadicPartition {
    pub fn new(cutoffs: CutoffPair, j_max: u32, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "gamma={gamma} must lie in (0, 1]"
            )));
        }
        if j_max < 2 {
            return Err(Error::Parameter(format!("j_max={j_max} too small")));
        }
        Ok(DyadicPartition {
            cutoffs,
            j_max,
            gamma,
        })
    }

    /// Partition sized for a grid: `J = log₂(P/2) - 1`, so the top annulus
    /// stays strictly inside the resolved frequency range.
    pub fn for_grid(grid: &Grid, gamma: f64) -> Result<Self> {
        let j_max = (grid.points_per_axis() as f64 / 2.0).log2() as u32 - 1;
        Self::new(CutoffPair::default(), j_max, gamma)
    }

    /// Smoothing scale of level `j`.
    pub fn epsilon(&self, j: u32) -> f64 {
        2f64.powf(-(j as f64) * self.gamma)
    }

    /// Radial value of `ψ_j`.
    pub fn psi_radial(&self, j: u32, r: f64) -> Result<f64> {
        if j > self.j_max {
            return Err(Error::Parameter(format!(
                "band index {j} exceeds j_max={}",
                self.j_max
            )));
        }
        Ok(self.cutoffs.band_radial(j, r))
    }

    /// `ψ_j(ξ)`.
    pub fn psi(&self, j: u32, xi: &[f64]) -> Result<f64> {
        self.psi_radial(j, norm(xi))
    }

    /// Worst deviation of `Σ_j ψ_j` from 1 over lattice frequencies with
    /// `⟨ξ⟩ ≤ 2^{J-1}`.
    pub fn partition_residual(&self, grid: &Grid) -> f64 {
        let cap = 2f64.powi(self.j_max as i32 - 1);
        let mut worst = 0.0f64;
        for idx in 0..grid.len() {
            let xi = grid.xi_point(idx);
            if bracket(&xi[..grid.dim()]) > cap {
                continue;
            }
            let sum: f64 = (0..=self.j_max)
                .map(|j| self.psi(j, &xi[..grid.dim()]).expect("j in range"))
                .sum();
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    /// Largest number of simultaneously nonzero bands over lattice frequencies.
    pub fn max_overlap(&self, grid: &Grid) -> usize {
        let mut worst = 0usize;
        for idx in 0..grid.len() {
            let xi = grid.xi_point(idx);
            let active = (0..=self.j_max)
                .filter(|&j| self.psi(j, &xi[..grid.dim()]).unwrap().abs() > 1e-14)
                .count();
            worst = worst.max(active);
        }
        worst
    }

    /// Bands with `ψ_j(ξ) ≠ 0` at one frequency point (at most 3).
    pub fn active_bands(&self, xi: &[f64]) -> Vec<u32> {
        let r = norm(xi);
        // supp ψ_j ⊆ [2^{j-1}, 2^{j+1}] for j ≥ 1, ψ_0 lives in |ξ| ≤ 2
        let j_hi = if r <= 2.0 {
            2
        } else {
            (r.log2().ceil() as u32 + 1).min(self.j_max)
        };
        let j_lo = j_hi.saturating_sub(3);
        (j_lo..=j_hi.min(self.j_max))
            .filter(|&j| self.psi_radial(j, r).unwrap().abs() > 1e-15)
            .collect()
    }
}

/// Sup of `|∂_ξ^α ψ_j|·⟨ξ⟩^{|α|}` per derivative order, uniformly over bands,
/// together with the range of `2^{-j}⟨ξ⟩` over band supports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandEstimateReport {
    /// `(|α|, sup_j sup_ξ |∂^α ψ_j|·⟨ξ⟩^{|α|})` for each examined α.
    pub derivative_constants: Vec<(Multi, f64)>,
    /// Per-band constants for |α| = 1 (to judge uniformity in j).
    pub first_order_by_band: Vec<f64>,
    /// min and max of `2^{-j}⟨ξ⟩` over the supports of `ψ_j`, `j ≥ 1`.
    pub scale_ratio_range: [f64; 2],
    pub pass: bool,
}

/// Scan the band estimates: derivative growth `|∂^α ψ_j| ≲ ⟨ξ⟩^{-|α|}` and
/// comparability of `2^{-j}` with `⟨ξ⟩^{-1}` on each band support.
pub fn band_estimate_check(partition: &DyadicPartition, dim: usize) -> Result<BandEstimateReport> {
    if !(1..=2).contains(&dim) {
        return Err(Error::Parameter(format!("dim={dim} unsupported")));
    }
    // ξ-derivatives by nested central differences with a step proportional to
    // the band scale (ψ_j varies on scale 2^j)
    fn psi_partial(
        p: &DyadicPartition,
        j: u32,
        xi: &[f64; 2],
        alpha: &Multi,
        dim: usize,
    ) -> f64 {
        if multi_order(alpha) == 0 {
            return p.psi(j, &xi[..dim]).unwrap();
        }
        let axis = if alpha[0] > 0 { 0 } else { 1 };
        let mut lower = *alpha;
        lower[axis] -= 1;
        let h = 2f64.powi(j as i32) * 1e-3;
        let (mut xp, mut xm) = (*xi, *xi);
        xp[axis] += h;
        xm[axis] -= h;
        (psi_partial(p, j, &xp, &lower, dim) - psi_partial(p, j, &xm, &lower, dim)) / (2.0 * h)
    }

    let alphas: Vec<Multi> = if dim == 1 {
        vec![[0, 0], [1, 0], [2, 0], [3, 0]]
    } else {
        vec![[0, 0], [1, 0], [0, 1], [1, 1], [2, 0], [2, 1]]
    };
    let mut derivative_constants = Vec::new();
    let mut first_order_by_band = vec![0.0f64; (partition.j_max + 1) as usize];
    let mut ratio_min = f64::MAX;
    let mut ratio_max = 0.0f64;

    let dirs: Vec<[f64; 2]> = if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..8)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 4.0;
                [t.cos(), t.sin()]
            })
            .collect()
    };

    for alpha in &alphas {
        let ao = multi_order(alpha);
        let mut sup = 0.0f64;
        for j in 0..=partition.j_max {
            let mut band_sup = 0.0f64;
            // radial sweep across the support annulus
            let r_lo = if j == 0 { 0.0 } else { 2f64.powi(j as i32 - 1) };
            let r_hi = 2f64.powi(j as i32 + 1);
            for i in 0..40 {
                let r = r_lo + (r_hi - r_lo) * (i as f64 + 0.5) / 40.0;
                for d in &dirs {
                    let xi = [r * d[0], r * d[1]];
                    let b = bracket(&xi[..dim]);
                    let v = psi_partial(partition, j, &xi, alpha, dim).abs() * b.powi(ao as i32);
                    band_sup = band_sup.max(v);
                    if ao == 0 && j >= 1 && partition.psi(j, &xi[..dim])?.abs() > 1e-9 {
                        let ratio = 2f64.powi(-(j as i32)) * b;
                        ratio_min = ratio_min.min(ratio);
                        ratio_max = ratio_max.max(ratio);
                    }
                }
            }
            if ao == 1 && alpha[0] == 1 {
                first_order_by_band[j as usize] = band_sup;
            }
            sup = sup.max(band_sup);
        }
        derivative_constants.push((*alpha, sup));
    }

    let zero_ok = derivative_constants
        .iter()
        .find(|(a, _)| multi_order(a) == 0)
        .map(|&(_, c)| c <= 1.0 + 1e-12)
        .unwrap_or(false);
    let ratios_ok = ratio_min >= 0.25 && ratio_max <= 4.0;
    // uniformity in j: top bands should not exceed the overall scale by much
    let first_finite = first_order_by_band.iter().all(|c| c.is_finite());
    let pass = zero_ok && ratios_ok && first_finite;
    Ok(BandEstimateReport {
        derivative_constants,
        first_order_by_band,
        scale_ratio_range: [ratio_min, ratio_max],
        pass,
    })
}

/// `J_ε f = φ(εD) f`: spectral multiplication by `φ(ε|ξ|)`.
pub fn apply_j(eps: f64, f: &GridFunction, cutoffs: &CutoffPair) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps={eps} must be positive")));
    }
    let dim = f.grid.dim();
    let cutoffs = *cutoffs;
    let mut spec = f.forward();
    spec.scale_by(|xi| Complex64::new(cutoffs.phi_radial(eps * norm(&xi[..dim])), 0.0));
    Ok(spec.inverse())
}

/// `D^β J_ε f` (or `D^β (1-J_ε) f`): multiplier `ξ^β·φ(ε|ξ|)` resp.
/// `ξ^β·(1-φ(ε|ξ|))`.
pub fn apply_j_derivative(
    eps: f64,
    f: &GridFunction,
    cutoffs: &CutoffPair,
    beta: &Multi,
    complement: bool,
) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps={eps} must be positive")));
    }
    let dim = f.grid.dim();
    let beta = *beta;
    let cutoffs = *cutoffs;
    let mut spec = f.forward();
    spec.scale_by(|xi| {
        let phi = cutoffs.phi_radial(eps * norm(&xi[..dim]));
        let m = if complement { 1.0 - phi } else { phi };
        let mono: f64 = (0..dim).map(|i| xi[i].powi(beta[i] as i32)).product();
        Complex64::new(m * mono, 0.0)
    });
    Ok(spec.inverse())
}

/// Result of a mollifier rate sweep for one derivative order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MollifierSweep {
    /// `‖D^β J_ε f‖_∞` against ε (slope should not fall below `-(|β|-s)`).
    pub smooth_side: SweepReport,
    /// `‖D^β (1-J_ε) f‖_∞` against ε (slope should not fall below `s-|β|`).
    pub residual_side: SweepReport,
}

/// Sweep `ε ↦ ‖D^β J_ε f‖_∞` and `‖D^β(1-J_ε)f‖_∞` over a dyadic ε-list and
/// fit log–log slopes; `s` is the claimed Hölder regularity of `f`.
pub fn mollifier_rate_sweep(
    f: &GridFunction,
    s: f64,
    beta: &Multi,
    eps_list: &[f64],
    cutoffs: &CutoffPair,
    tolerance: f64,
) -> Result<MollifierSweep> {
    if eps_list.len() < 4 {
        return Err(Error::Parameter(format!(
            "rate sweep needs ≥ 4 ε values, got {}",
            eps_list.len()
        )));
    }
    let bo = multi_order(beta) as f64;
    let mut smooth_norms = Vec::new();
    let mut resid_norms = Vec::new();
    for &eps in eps_list {
        smooth_norms.push(apply_j_derivative(eps, f, cutoffs, beta, false)?.sup_norm());
        resid_norms.push(apply_j_derivative(eps, f, cutoffs, beta, true)?.sup_norm());
    }
    let logs_eps: Vec<f64> = eps_list.iter().map(|e| e.log2()).collect();
    let fit = |norms: &[f64]| -> f64 {
        let logs: Vec<f64> = norms.iter().map(|&n| n.max(1e-300).log2()).collect();
        linear_fit(&logs_eps, &logs).0
    };
    let smooth_slope = fit(&smooth_norms);
    let resid_slope = fit(&resid_norms);
    let smooth_expected = -(bo - s);
    let resid_expected = s - bo;
    Ok(MollifierSweep {
        smooth_side: SweepReport {
            epsilons: eps_list.to_vec(),
            norms: smooth_norms,
            slope: smooth_slope,
            expected_slope: smooth_expected,
            tolerance,
            pass: smooth_slope >= smooth_expected - tolerance,
        },
        residual_side: SweepReport {
            epsilons: eps_list.to_vec(),
            norms: resid_norms,
            slope: resid_slope,
            expected_slope: resid_expected,
            tolerance,
            pass: resid_slope >= resid_expected - tolerance,
        },
    })
}

/// Residual of the commutation `D^α J_ε f = J_ε D^α f` on the lattice.
pub fn commutation_residual(
    eps: f64,
    f: &GridFunction,
    cutoffs: &CutoffPair,
    alpha: &Multi,
) -> Result<f64> {
    let d_then_j = apply_j(eps, &derivative(f, alpha), cutoffs)?;
    let j_then_d = derivative(&apply_j(eps, f, cutoffs)?, alpha);
    let mut worst = 0.0f64;
    for c in 0..f.components {
        let a = d_then_j.component(c);
        let b = j_then_d.component(c);
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

/// Spectral derivative `D^α f` (multiplier `ξ^α`).
fn derivative(f: &GridFunction, alpha: &Multi) -> GridFunction {
    let dim = f.grid.dim();
    let alpha = *alpha;
    let mut spec = f.forward();
    spec.scale_by(|xi| {
        let mono: f64 = (0..dim).map(|i| xi[i].powi(alpha[i] as i32)).product();
        Complex64::new(mono, 0.0)
    });
    spec.inverse()
}

/// Convenience: the standard dyadic ε list `2^{-1}, …, 2^{-k}`.
pub fn dyadic_epsilons(k: u32) -> Vec<f64> {
    (1..=k).map(|i| 2f64.powi(-(i as i32))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::lacunary_cosine;
    use crate::grid::Grid;

    #[test]
    fn cutoff_pair_shape() {
        for profile in [CutoffProfile::ExpBump, CutoffProfile::PolyBump] {
            let c = CutoffPair::new(profile);
            assert_eq!(c.phi_radial(0.5), 1.0);
            assert_eq!(c.phi_radial(1.0), 1.0);
            assert_eq!(c.phi_radial(3.0), 0.0);
            let mid = c.phi_radial(1.5);
            assert!(mid > 0.0 && mid < 1.0);
            // monotone descent across the transition
            let mut prev = c.phi_radial(1.0);
            for i in 1..=50 {
                let v = c.phi_radial(1.0 + i as f64 / 50.0);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
            // radial derivative consistent with finite differences
            let h = 1e-6;
            let fd = (c.phi_radial(1.5 + h) - c.phi_radial(1.5 - h)) / (2.0 * h);
            assert!((c.phi_radial_deriv(1.5) - fd).abs() < 1e-8);
            // higher radial derivatives are finite up to order 4
            for n in 2..=4 {
                assert!(c.phi_radial_deriv_n(n, 1.3).is_finite());
            }
        }
    }

    #[test]
    fn partition_telescopes_to_one() {
        let grid = Grid::new(1, 256, 1.0).unwrap();
        let p = DyadicPartition::for_grid(&grid, 0.8).unwrap();
        assert_eq!(p.j_max, 6);
        assert!(p.partition_residual(&grid) <= 1e-12);
        assert!(p.max_overlap(&grid) <= 3);
        // spot identity: Σψ_j = ψ₀(2^{-J}ξ) everywhere, not just low ξ
        for xi0 in [0.3, 5.0, 40.0, 100.0] {
            let sum: f64 = (0..=p.j_max).map(|j| p.psi(j, &[xi0]).unwrap()).sum();
            let tel = p.cutoffs.phi_radial(2f64.powi(-(p.j_max as i32)) * xi0);
            assert!((sum - tel).abs() < 1e-14, "xi={xi0}");
        }
    }

    #[test]
    fn band_supports_and_active_band_lookup() {
        let p = DyadicPartition::new(CutoffPair::default(), 8, 0.8).unwrap();
        // ψ_3 vanishes at |ξ| = 1 (below its annulus)
        assert_eq!(p.psi(3, &[1.0]).unwrap(), 0.0);
        // ψ_j lives on 2^{j-1} ≤ |ξ| ≤ 2^{j+1}
        for j in 1..=6u32 {
            let r_in = 2f64.powi(j as i32) * 1.2;
            assert!(p.psi_radial(j, r_in).unwrap() > 0.0, "j={j} inside");
            assert_eq!(p.psi_radial(j, 2f64.powi(j as i32 + 1) * 1.01).unwrap(), 0.0);
            assert_eq!(p.psi_radial(j, 2f64.powi(j as i32 - 1) * 0.99).unwrap(), 0.0);
        }
        // active_bands finds exactly the nonzero ones
        for r in [0.2, 1.7, 3.3, 9.0, 77.0] {
            let active = p.active_bands(&[r]);
            assert!(!active.is_empty() && active.len() <= 3, "r={r}: {active:?}");
            for j in 0..=p.j_max {
                let v = p.psi_radial(j, r).unwrap().abs();
                assert_eq!(active.contains(&j), v > 1e-15, "r={r}, j={j}");
            }
        }
        // out-of-range band index is a parameter error
        assert!(p.psi(9, &[1.0]).is_err());
    }

    #[test]
    fn unbounded_bands_always_sum_to_one() {
        let c = CutoffPair::default();
        for r in [0.0, 0.3, 1.0, 2.7, 17.0, 511.0, 12345.6] {
            let bands = c.bands_at(r);
            assert!(bands.len() <= 3, "r={r}: {bands:?}");
            let total: f64 = bands.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14, "r={r}: sum {total}");
            for &(j, w) in &bands {
                assert!((c.band_radial(j, r) - w).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn band_estimates_hold() {
        let p = DyadicPartition::new(CutoffPair::default(), 7, 0.8).unwrap();
        let rep = band_estimate_check(&p, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.scale_ratio_range[0] >= 0.25 && rep.scale_ratio_range[1] <= 4.0);
        // |α| = 1 constants stay uniform across bands (no growth with j)
        let c: Vec<f64> = rep.first_order_by_band.iter().copied().skip(1).collect();
        let head = c[..2].iter().fold(0.0f64, |a, &b| a.max(b));
        let tail = c[c.len() - 2..].iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(tail <= 2.0 * head.max(1e-9), "head {head} vs tail {tail}");
    }

    #[test]
    fn mollifier_acts_as_spectral_cutoff() {
        let grid = Grid::new(1, 256, 1.0).unwrap();
        let c = CutoffPair::default();
        // mode k=4, ε small: φ(εk)=1 keeps it
        let f = GridFunction::from_scalar_fn(grid.clone(), |x| {
            Complex64::new(0.0, 4.0 * x[0]).exp()
        });
        let kept = apply_j(0.1, &f, &c).unwrap();
        let mut diff = 0.0f64;
        for (a, b) in kept.component(0).iter().zip(f.component(0)) {
            diff = diff.max((a - b).norm());
        }
        assert!(diff < 1e-12, "flat region should be untouched, diff {diff}");
        // mode k=40, ε|k| = 4 ≥ 2: killed
        let g = GridFunction::from_scalar_fn(grid.clone(), |x| {
            Complex64::new(0.0, 40.0 * x[0]).exp()
        });
        let killed = apply_j(0.1, &g, &c).unwrap();
        assert!(killed.sup_norm() < 1e-12);
        // constants are fixed
        let one = GridFunction::from_scalar_fn(grid, |_| Complex64::new(1.0, 0.0));
        let same = apply_j(0.37, &one, &c).unwrap();
        assert!((same.sup_norm() - 1.0).abs() < 1e-13);
        // contraction on every mode: |φ| ≤ 1
        assert!(apply_j(0.05, &g, &c).unwrap().sup_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn mollifier_commutes_with_derivatives() {
        let grid = Grid::new(1, 256, 2.0).unwrap();
        let f = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new((3.0 * x[0]).sin() + 0.2 * (11.0 * x[0]).cos(), 0.0)
        });
        let c = CutoffPair::default();
        for alpha in [[1, 0], [2, 0]] {
            let r = commutation_residual(0.11, &f, &c, &alpha).unwrap();
            assert!(r < 1e-10, "alpha={alpha:?}: residual {r}");
        }
    }

    #[test]
    fn mollifier_rates_match_holder_regularity() {
        // Hölder-0.3 lacunary sum resolved well below Nyquist (terms ≤ 2^8)
        let grid = Grid::new(1, 1024, 1.0).unwrap();
        let tau = 0.3;
        let f = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new(lacunary_cosine(tau, 9, x[0]), 0.0)
        });
        let c = CutoffPair::default();
        let eps = dyadic_epsilons(6);
        let sweep = mollifier_rate_sweep(&f, tau, &[1, 0], &eps, &c, 0.15).unwrap();
        // first derivative of a C^{0.3} function grows like ε^{-0.7}
        assert!(
            sweep.smooth_side.pass,
            "smooth-side slope {} (expected ≥ {} - tol)",
            sweep.smooth_side.slope, sweep.smooth_side.expected_slope
        );
        assert!(
            (sweep.smooth_side.slope - (-0.7)).abs() < 0.15,
            "slope {}",
            sweep.smooth_side.slope
        );
        // β = 0 residual side: ‖(1-J_ε)f‖_∞ ≲ ε^{0.3}
        let sweep0 = mollifier_rate_sweep(&f, tau, &[0, 0], &eps, &c, 0.15).unwrap();
        assert!(
            sweep0.residual_side.pass,
            "residual slope {}",
            sweep0.residual_side.slope
        );
        // degenerate list rejected
        assert!(mollifier_rate_sweep(&f, tau, &[0, 0], &eps[..3], &c, 0.1).is_err());
    }

    #[test]
    fn derivative_of_constant_is_zero_after_mollify() {
        let grid = Grid::new(1, 128, 1.0).unwrap();
        let one = GridFunction::from_scalar_fn(grid, |_| Complex64::new(2.5, 0.0));
        let c = CutoffPair::default();
        let d = apply_j_derivative(0.2, &one, &c, &[1, 0], false).unwrap();
        assert!(d.sup_norm() < 1e-12);
    }

    #[test]
    fn phase_helper_consistency() {
        // i_pow and the spectral derivative convention agree: D = -i∂ has
        // multiplier ξ, so ∂^α has multiplier (iξ)^α = i^{|α|}ξ^α
        assert_eq!(i_pow(0), Complex64::new(1.0, 0.0));
        assert_eq!(i_pow(1), Complex64::new(0.0, 1.0));
    }
}
