//! Symbols `a(x, ξ)` with derivative oracles and empirical class verification.
//!
//! A [`Symbol`] pairs a [`SymbolKernel`] (pointwise evaluation plus optional
//! exact partial derivatives) with a [`SymbolClassSpec`] describing the decay
//! class it claims to belong to:
//!
//! ```text
//! |∂_ξ^α ∂_x^β a(x,ξ)|        ≤ C·⟨ξ⟩^{m - ρ|α| + δ|β|}      (|β| ≤ m̃)
//! ‖∂_ξ^α a(·,ξ)‖_{C^{m̃,τ}}   ≤ C·⟨ξ⟩^{m - ρ|α| + δ(m̃+τ)}
//! ```
//!
//! [`verify_symbol_class`] probes these inequalities on dyadic annuli
//! `⟨ξ⟩ ∈ [2^j, 2^{j+1})` and fits the observed ⟨ξ⟩-exponents by least squares;
//! the *dot* variant additionally requires the constants to vanish as
//! `|x| → ∞` (checked through a radial envelope), and the *tilde* variant
//! requires that of the x-derivatives `∂_x^β a`, `1 ≤ |β| ≤ m̃`, only.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::bracket;
use crate::holder::quotient_seminorm_1d;
use crate::report::{ConditionReport, DecayFit, SeminormReport};
use crate::util::{
    linear_fit, multi_order, multis_of_order, neg_i_pow, norm, par_collect, Multi, Point,
};

/// Largest matrix dimension supported by [`SymbolValue`].
pub const MAX_MATRIX_DIM: usize = 4;

/// A small complex matrix value (`N ≤ 4`), stored inline so symbol evaluation
/// never allocates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolValue {
    n: usize,
    d: [Complex64; MAX_MATRIX_DIM * MAX_MATRIX_DIM],
}

impl SymbolValue {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_MATRIX_DIM).contains(&n));
        SymbolValue {
            n,
            d: [Complex64::new(0.0, 0.0); 16],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut v = Self::zeros(n);
        for i in 0..n {
            v.set(i, i, Complex64::new(1.0, 0.0));
        }
        v
    }

    pub fn from_scalar(z: Complex64) -> Self {
        let mut v = Self::zeros(1);
        v.set(0, 0, z);
        v
    }

    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    /// The single entry of a 1×1 value.
    pub fn scalar(&self) -> Complex64 {
        debug_assert_eq!(self.n, 1);
        self.d[0]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.n && j < self.n);
        self.d[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        debug_assert!(i < self.n && j < self.n);
        self.d[i * self.n + j] = z;
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.d[k] += other.d[k];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.d[k] -= other.d[k];
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.d[k] *= z;
        }
        out
    }

    /// Matrix product.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Entrywise supremum norm.
    pub fn max_abs(&self) -> f64 {
        (0..self.n * self.n).map(|k| self.d[k].norm()).fold(0.0, f64::max)
    }

    /// Determinant (closed cofactor forms for `N ≤ 3`, one expansion step for
    /// `N = 4`).
    pub fn det(&self) -> Complex64 {
        let g = |i: usize, j: usize| self.get(i, j);
        match self.n {
            1 => g(0, 0),
            2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
            3 => {
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                    - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
            }
            _ => {
                let mut total = Complex64::new(0.0, 0.0);
                for col in 0..4 {
                    let minor = self.minor(0, col);
                    let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                    total += g(0, col) * minor.det() * sign;
                }
                total
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> SymbolValue {
        let mut out = Self::zeros(self.n - 1);
        let mut r = 0;
        for i in 0..self.n {
            if i == row {
                continue;
            }
            let mut c = 0;
            for j in 0..self.n {
                if j == col {
                    continue;
                }
                out.set(r, c, self.get(i, j));
                c += 1;
            }
            r += 1;
        }
        out
    }

    /// Inverse by Cramer's rule for `N ≤ 3`, cofactor expansion for `N = 4`.
    /// Returns `None` when the determinant underflows the scale of the entries.
    pub fn inverse(&self) -> Option<SymbolValue> {
        let det = self.det();
        let scale = self.max_abs().powi(self.n as i32).max(f64::MIN_POSITIVE);
        if det.norm() < 1e-14 * scale {
            return None;
        }
        let inv_det = det.finv();
        let mut out = Self::zeros(self.n);
        if self.n == 1 {
            out.set(0, 0, inv_det);
            return Some(out);
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                // adjugate: transpose of the cofactor matrix
                out.set(j, i, self.minor(i, j).det() * sign * inv_det);
            }
        }
        Some(out)
    }
}

/// Decay-class variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassVariant {
    /// Uniform constants in x.
    Plain,
    /// Constants vanish as `|x| → ∞` (for every examined derivative pair).
    Dot,
    /// The x-derivatives `∂_x^β a`, `1 ≤ |β| ≤ m̃`, satisfy the dot condition;
    /// `a` itself may tend to a nonzero limit at infinity.
    Tilde,
}

/// The decay class a symbol claims to belong to.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymbolClassSpec {
    /// Order `m` (⟨ξ⟩-growth at `α = β = 0`).
    pub order: f64,
    /// ξ-decay gain per ξ-derivative, `ρ ∈ [0, 1]`.
    pub rho: f64,
    /// ⟨ξ⟩-growth per x-derivative, `δ ∈ [0, 1]`, `δ ≤ ρ` here.
    pub delta: f64,
    /// Integer x-smoothness `m̃`.
    pub x_order: u32,
    /// Hölder exponent `τ ∈ (0, 1)` of the top x-derivatives.
    pub x_holder: f64,
    /// Largest admissible ξ-derivative order `M` (`None` = unlimited).
    pub xi_cap: Option<u32>,
    /// Matrix dimension `N ≤ 4`.
    pub matrix_dim: usize,
    pub variant: ClassVariant,
}

impl SymbolClassSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) || !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Parameter(format!(
                "rho={}, delta={} must lie in [0,1]",
                self.rho, self.delta
            )));
        }
        if self.delta > self.rho {
            return Err(Error::Parameter(format!(
                "delta={} must not exceed rho={}",
                self.delta, self.rho
            )));
        }
        if !(self.x_holder > 0.0 && self.x_holder < 1.0) {
            return Err(Error::Parameter(format!(
                "x_holder={} must lie in (0,1)",
                self.x_holder
            )));
        }
        if !(1..=MAX_MATRIX_DIM).contains(&self.matrix_dim) {
            return Err(Error::Parameter(format!(
                "matrix_dim={} must lie in 1..=4",
                self.matrix_dim
            )));
        }
        Ok(())
    }

    /// Total x-regularity `m̃ + τ`.
    pub fn x_regularity(&self) -> f64 {
        self.x_order as f64 + self.x_holder
    }

    /// Convenience constructor for scalar classes.
    pub fn scalar(order: f64, rho: f64, delta: f64, x_order: u32, x_holder: f64) -> Self {
        SymbolClassSpec {
            order,
            rho,
            delta,
            x_order,
            x_holder,
            xi_cap: None,
            matrix_dim: 1,
            variant: ClassVariant::Plain,
        }
    }

    pub fn with_variant(mut self, v: ClassVariant) -> Self {
        self.variant = v;
        self
    }

    pub fn with_xi_cap(mut self, m: u32) -> Self {
        self.xi_cap = Some(m);
        self
    }
}

/// Pointwise evaluation with optional exact partial derivatives.
///
/// `alpha` counts plain ξ-partials `∂_ξ^α`, `beta` plain x-partials `∂_x^β`
/// (no `-i` factors; see [`Symbol::d_x_derivative`] for the `D^β` convention).
/// Returning `None` signals "no exact formula at this order" and defers to the
/// finite-difference fallback if the owning [`Symbol`] allows it. Order zero
/// (`alpha = beta = 0`) must always be supported.
pub trait SymbolKernel: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix_dim(&self) -> usize;
    fn eval_exact(&self, x: &Point, xi: &Point, alpha: &Multi, beta: &Multi)
        -> Option<SymbolValue>;
    /// Pointwise limit `a(∞, ξ)` along `|x| → ∞`, if the symbol has one.
    fn limit_at_infinity(&self, _xi: &Point) -> Option<SymbolValue> {
        None
    }
}

/// How to produce derivatives the kernel has no exact formula for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Only exact oracles; missing orders are a capability error.
    ExactOnly,
    /// Central finite differences on top of whatever the kernel provides.
    FiniteDifference,
}

/// A symbol: kernel + claimed class + derivative policy.
#[derive(Clone)]
pub struct Symbol {
    pub name: String,
    pub dim: usize,
    pub spec: SymbolClassSpec,
    pub derivative_mode: DerivativeMode,
    kernel: Arc<dyn SymbolKernel>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("spec", &self.spec)
            .finish()
    }
}

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        spec: SymbolClassSpec,
        kernel: Arc<dyn SymbolKernel>,
    ) -> Result<Self> {
        spec.validate()?;
        if kernel.dim() != dim {
            return Err(Error::Shape(format!(
                "kernel dim {} vs symbol dim {dim}",
                kernel.dim()
            )));
        }
        if kernel.matrix_dim() != spec.matrix_dim {
            return Err(Error::Shape(format!(
                "kernel matrix_dim {} vs class matrix_dim {}",
                kernel.matrix_dim(),
                spec.matrix_dim
            )));
        }
        Ok(Symbol {
            name: name.into(),
            dim,
            spec,
            derivative_mode: DerivativeMode::FiniteDifference,
            kernel,
        })
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Self {
        self.derivative_mode = mode;
        self
    }

    /// Replace the claimed class (e.g. after combinators widen it).
    pub fn with_spec(mut self, spec: SymbolClassSpec) -> Result<Self> {
        spec.validate()?;
        if spec.matrix_dim != self.kernel.matrix_dim() {
            return Err(Error::Shape(format!(
                "class matrix_dim {} vs kernel matrix_dim {}",
                spec.matrix_dim,
                self.kernel.matrix_dim()
            )));
        }
        self.spec = spec;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kernel(&self) -> &Arc<dyn SymbolKernel> {
        &self.kernel
    }

    /// Pointwise value (order-zero evaluation never fails).
    pub fn eval(&self, x: &Point, xi: &Point) -> SymbolValue {
        self.kernel
            .eval_exact(x, xi, &[0, 0], &[0, 0])
            .expect("symbol kernels must support order-zero evaluation")
    }

    /// `∂_ξ^α ∂_x^β a(x, ξ)`, exact when the kernel can, otherwise central
    /// finite differences (ξ-step `min(0.5, 0.01·⟨ξ⟩)`, x-step `1e-3`).
    pub fn eval_partial(&self, x: &Point, xi: &Point, alpha: &Multi, beta: &Multi)
        -> Result<SymbolValue>
    {
        if let Some(cap) = self.spec.xi_cap {
            if multi_order(alpha) > cap as usize {
                return Err(Error::Capability(format!(
                    "ξ-derivative order {} exceeds the declared cap M={cap} of '{}'",
                    multi_order(alpha),
                    self.name
                )));
            }
        }
        if let Some(v) = self.kernel.eval_exact(x, xi, alpha, beta) {
            return Ok(v);
        }
        if self.derivative_mode == DerivativeMode::ExactOnly {
            return Err(Error::Capability(format!(
                "'{}' has no exact derivative at α={alpha:?}, β={beta:?}",
                self.name
            )));
        }
        // recurse: peel one ξ-derivative first, then x-derivatives
        if let Some(axis) = (0..self.dim).find(|&a| alpha[a] > 0) {
            let mut lower = *alpha;
            lower[axis] -= 1;
            let h = (0.01 * bracket(&xi[..self.dim])).min(0.5);
            let (mut xp, mut xm) = (*xi, *xi);
            xp[axis] += h;
            xm[axis] -= h;
            let vp = self.eval_partial(x, &xp, &lower, beta)?;
            let vm = self.eval_partial(x, &xm, &lower, beta)?;
            return Ok(vp.sub(&vm).scale(Complex64::new(1.0 / (2.0 * h), 0.0)));
        }
        if let Some(axis) = (0..self.dim).find(|&a| beta[a] > 0) {
            let mut lower = *beta;
            lower[axis] -= 1;
            let h = 1e-3;
            let (mut xp, mut xm) = (*x, *x);
            xp[axis] += h;
            xm[axis] -= h;
            let vp = self.eval_partial(&xp, xi, alpha, &lower)?;
            let vm = self.eval_partial(&xm, xi, alpha, &lower)?;
            return Ok(vp.sub(&vm).scale(Complex64::new(1.0 / (2.0 * h), 0.0)));
        }
        // alpha = beta = 0 but the kernel returned None
        Err(Error::Capability(format!(
            "'{}' failed order-zero evaluation",
            self.name
        )))
    }

    /// `∂_ξ^α D_x^β a = (-i)^{|β|} ∂_ξ^α ∂_x^β a`.
    pub fn d_x_derivative(&self, x: &Point, xi: &Point, alpha: &Multi, beta: &Multi)
        -> Result<SymbolValue>
    {
        Ok(self
            .eval_partial(x, xi, alpha, beta)?
            .scale(neg_i_pow(multi_order(beta))))
    }

    pub fn limit_at_infinity(&self, xi: &Point) -> Option<SymbolValue> {
        self.kernel.limit_at_infinity(xi)
    }
}

/// Fit `magnitude ≈ C·⟨ξ⟩^r` over dyadic annuli from `(⟨ξ⟩, magnitude)` pairs.
///
/// Bins by `j = ⌊log₂⟨ξ⟩⌋`, takes the per-annulus supremum, and runs least
/// squares of `log₂ sup` against the annulus midpoint exponent. Annuli whose
/// supremum is exactly zero are skipped; at least 4 usable annuli are required
/// unless *every* magnitude is zero (then the sentinel `exponent = None,
/// all_zero = true` is returned).
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<DecayFit> {
    let mut bins: std::collections::BTreeMap<i32, f64> = std::collections::BTreeMap::new();
    let mut any_nonzero = false;
    for &(b, mag) in samples {
        if !(b >= 1.0 && b.is_finite()) {
            return Err(Error::Parameter(format!("⟨ξ⟩ sample {b} must be ≥ 1")));
        }
        let j = b.log2().floor() as i32;
        let slot = bins.entry(j).or_insert(0.0);
        *slot = slot.max(mag);
        if mag != 0.0 {
            any_nonzero = true;
        }
    }
    if !any_nonzero {
        return Ok(DecayFit {
            exponent: None,
            residual_rms: 0.0,
            annuli_used: 0,
            all_zero: true,
        });
    }
    let usable: Vec<(f64, f64)> = bins
        .iter()
        .filter(|&(_, &s)| s > 0.0)
        .map(|(&j, &s)| (j as f64 + 0.5, s.log2()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::Parameter(format!(
            "decay fit needs ≥ 4 annuli with nonzero suprema, got {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(DecayFit {
        exponent: Some(slope),
        residual_rms,
        annuli_used: xs.len() as u32,
        all_zero: false,
    })
}

/// Where a verification sweep samples the phase space.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub dim: usize,
    /// Dyadic annuli `⟨ξ⟩ ∈ [2^j, 2^{j+1})` for `j_min ≤ j ≤ j_max`.
    pub j_min: u32,
    pub j_max: u32,
    /// ⟨ξ⟩ magnitudes per annulus (log-spaced).
    pub radial_per_annulus: usize,
    /// Unit directions for ξ.
    pub directions: Vec<Point>,
    /// Coarse x sample set for suprema.
    pub x_points: Vec<Point>,
    /// Fine 1-D x-axis for Hölder quotient sweeps (along axis 0).
    pub x_axis_fine: Vec<f64>,
    /// Maximum pair separation in the quotient sweeps.
    pub quotient_window: f64,
    /// Largest ξ-derivative order examined.
    pub alpha_cap: u32,
    /// Largest admissible fitted-vs-claimed exponent gap.
    pub exponent_tol: f64,
    /// Radii for dot/tilde envelope checks.
    pub envelope_radii: Vec<f64>,
}

impl SamplingPlan {
    /// Default plan for a grid: annuli `1..=j_max`, 16 magnitudes per annulus,
    /// every 4th lattice point in x, quotient window 1.0, `|α| ≤ 3`.
    pub fn for_grid(grid: &crate::grid::Grid, j_max: u32) -> Result<Self> {
        let max_j = (grid.nyquist().log2().floor() as u32).saturating_sub(1);
        if j_max < 4 {
            return Err(Error::Parameter(format!(
                "j_max={j_max} gives fewer than 4 annuli"
            )));
        }
        let j_max = j_max.min(max_j.max(4));
        let dim = grid.dim();
        let directions: Vec<Point> = match dim {
            1 => vec![[1.0, 0.0], [-1.0, 0.0]],
            _ => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    [1.0, 0.0],
                    [-1.0, 0.0],
                    [0.0, 1.0],
                    [0.0, -1.0],
                    [s, s],
                    [s, -s],
                    [-s, s],
                    [-s, -s],
                ]
            }
        };
        let stride = match dim {
            1 => 4,
            _ => 8,
        };
        let axis = grid.x_axis();
        let x_points: Vec<Point> = match dim {
            1 => axis.iter().step_by(stride).map(|&x| [x, 0.0]).collect(),
            _ => {
                let mut pts = Vec::new();
                for &x0 in axis.iter().step_by(stride) {
                    for &x1 in axis.iter().step_by(stride) {
                        pts.push([x0, x1]);
                    }
                }
                pts
            }
        };
        let half = std::f64::consts::PI * grid.scale();
        Ok(SamplingPlan {
            dim,
            j_min: 1,
            j_max,
            radial_per_annulus: 16,
            directions,
            x_points,
            x_axis_fine: axis,
            quotient_window: 1.0f64.min(half / 2.0),
            alpha_cap: 3,
            exponent_tol: 0.1,
            envelope_radii: vec![half / 8.0, half / 5.0, half / 3.5, half / 2.5],
        })
    }

    pub fn with_alpha_cap(mut self, cap: u32) -> Self {
        self.alpha_cap = cap;
        self
    }

    pub fn with_exponent_tol(mut self, tol: f64) -> Self {
        self.exponent_tol = tol;
        self
    }

    /// ξ samples of one annulus: log-spaced brackets times each direction.
    pub fn xi_samples(&self, j: u32) -> Vec<Point> {
        let lo = (1u64 << j) as f64;
        let mut out = Vec::new();
        for i in 0..self.radial_per_annulus {
            // log-spaced within [2^j, 2^{j+1}), kept strictly inside the bin
            let t = (i as f64 + 0.5) / self.radial_per_annulus as f64;
            let b = lo * 2f64.powf(t);
            let r = (b * b - 1.0).max(0.0).sqrt();
            for d in &self.directions {
                out.push([r * d[0], r * d[1]]);
            }
        }
        out
    }
}

struct ConditionSpec {
    kind: &'static str,
    alpha: Multi,
    beta: Multi,
    claimed: f64,
}

/// Empirically verify the class membership claimed by `a.spec`.
pub fn verify_symbol_class(a: &Symbol, plan: &SamplingPlan) -> Result<SeminormReport> {
    if plan.dim != a.dim {
        return Err(Error::Shape(format!(
            "plan dim {} vs symbol dim {}",
            plan.dim, a.dim
        )));
    }
    let spec = a.spec;
    let alpha_cap = match spec.xi_cap {
        Some(m) => plan.alpha_cap.min(m),
        None => plan.alpha_cap,
    };
    let m_tilde = spec.x_order as usize;

    let mut conditions: Vec<ConditionSpec> = Vec::new();
    for ao in 0..=alpha_cap as usize {
        for alpha in multis_of_order(a.dim, ao) {
            for bo in 0..=m_tilde {
                for beta in multis_of_order(a.dim, bo) {
                    conditions.push(ConditionSpec {
                        kind: "sup_decay",
                        alpha,
                        beta,
                        claimed: spec.order - spec.rho * ao as f64 + spec.delta * bo as f64,
                    });
                }
            }
            conditions.push(ConditionSpec {
                kind: "holder_decay",
                alpha,
                beta: [m_tilde, 0],
                claimed: spec.order - spec.rho * ao as f64 + spec.delta * spec.x_regularity(),
            });
            match spec.variant {
                ClassVariant::Plain => {}
                ClassVariant::Dot => {
                    for bo in 0..=m_tilde {
                        for beta in multis_of_order(a.dim, bo) {
                            conditions.push(ConditionSpec {
                                kind: "envelope",
                                alpha,
                                beta,
                                claimed: spec.order - spec.rho * ao as f64
                                    + spec.delta * bo as f64,
                            });
                        }
                    }
                }
                ClassVariant::Tilde => {
                    for bo in 1..=m_tilde {
                        for beta in multis_of_order(a.dim, bo) {
                            conditions.push(ConditionSpec {
                                kind: "envelope",
                                alpha,
                                beta,
                                claimed: spec.order - spec.rho * ao as f64
                                    + spec.delta * bo as f64,
                            });
                        }
                    }
                }
            }
        }
    }

    let reports: Vec<Result<ConditionReport>> = par_collect(conditions.len(), |ci| {
        let cond = &conditions[ci];
        match cond.kind {
            "sup_decay" => sup_decay_condition(a, plan, cond),
            "holder_decay" => holder_decay_condition(a, plan, cond),
            "envelope" => envelope_condition(a, plan, cond),
            _ => unreachable!(),
        }
    });

    let mut conditions_out = Vec::new();
    let mut messages = Vec::new();
    let mut verdict = true;
    for r in reports {
        match r {
            Ok(c) => {
                if !c.pass {
                    verdict = false;
                    messages.push(format!(
                        "{} α={:?} β={:?}: fitted {:?} vs claimed {:.3}",
                        c.kind, c.alpha, c.beta, c.fit.exponent, c.claimed_exponent
                    ));
                }
                conditions_out.push(c);
            }
            Err(e) => {
                verdict = false;
                messages.push(format!("condition failed to evaluate: {e}"));
            }
        }
    }

    Ok(SeminormReport {
        symbol: a.name.clone(),
        class: spec,
        dim: a.dim,
        exponent_tolerance: plan.exponent_tol,
        conditions: conditions_out,
        verdict,
        messages,
    })
}

fn sup_decay_condition(
    a: &Symbol,
    plan: &SamplingPlan,
    cond: &ConditionSpec,
) -> Result<ConditionReport> {
    let mut samples = Vec::new();
    let mut best_constant = 0.0f64;
    for j in plan.j_min..=plan.j_max {
        for xi in plan.xi_samples(j) {
            let b = bracket(&xi[..a.dim]);
            let mut sup = 0.0f64;
            for x in &plan.x_points {
                sup = sup.max(a.eval_partial(x, &xi, &cond.alpha, &cond.beta)?.max_abs());
            }
            best_constant = best_constant.max(sup / b.powf(cond.claimed));
            samples.push((b, sup));
        }
    }
    let fit = fit_decay_exponent(&samples)?;
    let pass = fit.satisfies(cond.claimed, plan.exponent_tol);
    Ok(ConditionReport {
        kind: cond.kind.into(),
        alpha: cond.alpha,
        beta: cond.beta,
        claimed_exponent: cond.claimed,
        fit,
        best_constant,
        envelope: None,
        pass,
    })
}

fn holder_decay_condition(
    a: &Symbol,
    plan: &SamplingPlan,
    cond: &ConditionSpec,
) -> Result<ConditionReport> {
    let m_tilde = a.spec.x_order as usize;
    let tau = a.spec.x_holder;
    let dx = plan.x_axis_fine[1] - plan.x_axis_fine[0];
    let mut samples = Vec::new();
    let mut best_constant = 0.0f64;
    // one ξ magnitude per annulus per direction keeps the fine sweep affordable
    let thin = (plan.radial_per_annulus / 4).max(1);
    for j in plan.j_min..=plan.j_max {
        let xis = plan.xi_samples(j);
        for xi in xis.iter().step_by(thin) {
            let b = bracket(&xi[..a.dim]);
            // top-order x-derivative along axis 0 on the fine axis
            let beta_top = [m_tilde, 0];
            let line: Vec<Complex64> = plan
                .x_axis_fine
                .iter()
                .map(|&x0| {
                    a.eval_partial(&[x0, 0.0], xi, &cond.alpha, &beta_top)
                        .map(|v| Complex64::new(v.max_abs(), 0.0))
                })
                .collect::<Result<_>>()?;
            let semi = quotient_seminorm_1d(&line, dx, tau, plan.quotient_window);
            let mut sup = 0.0f64;
            for bo in 0..=m_tilde {
                for beta in multis_of_order(a.dim, bo) {
                    for x in plan.x_points.iter().step_by(2) {
                        sup = sup.max(a.eval_partial(x, xi, &cond.alpha, &beta)?.max_abs());
                    }
                }
            }
            let norm = sup + semi;
            best_constant = best_constant.max(norm / b.powf(cond.claimed));
            samples.push((b, norm));
        }
    }
    let fit = fit_decay_exponent(&samples)?;
    let pass = fit.satisfies(cond.claimed, plan.exponent_tol);
    Ok(ConditionReport {
        kind: cond.kind.into(),
        alpha: cond.alpha,
        beta: [m_tilde, 0],
        claimed_exponent: cond.claimed,
        fit,
        best_constant,
        envelope: None,
        pass,
    })
}

fn envelope_condition(
    a: &Symbol,
    plan: &SamplingPlan,
    cond: &ConditionSpec,
) -> Result<ConditionReport> {
    // normalized magnitude per x point, sup over all sampled ξ
    let mut per_x: Vec<(f64, f64)> = Vec::with_capacity(plan.x_points.len());
    for x in &plan.x_points {
        let r = norm(&x[..a.dim]);
        let mut sup = 0.0f64;
        for j in plan.j_min..=plan.j_max {
            for xi in plan.xi_samples(j).iter().step_by(3) {
                let b = bracket(&xi[..a.dim]);
                let v = a.eval_partial(x, xi, &cond.alpha, &cond.beta)?.max_abs();
                sup = sup.max(v / b.powf(cond.claimed));
            }
        }
        per_x.push((r, sup));
    }
    let envelope: Vec<[f64; 2]> = plan
        .envelope_radii
        .iter()
        .map(|&r0| {
            let sup = per_x
                .iter()
                .filter(|&&(r, _)| r >= r0)
                .map(|&(_, s)| s)
                .fold(0.0, f64::max);
            [r0, sup]
        })
        .collect();
    let first = envelope.first().map(|e| e[1]).unwrap_or(0.0);
    let last = envelope.last().map(|e| e[1]).unwrap_or(0.0);
    let pass = first == 0.0 || last <= first / 2.0;
    // also report the overall decay fit of this derivative pair
    let mut samples = Vec::new();
    for j in plan.j_min..=plan.j_max {
        for xi in plan.xi_samples(j).iter().step_by(3) {
            let b = bracket(&xi[..a.dim]);
            let mut sup = 0.0f64;
            for x in plan.x_points.iter().step_by(2) {
                sup = sup.max(a.eval_partial(x, xi, &cond.alpha, &cond.beta)?.max_abs());
            }
            samples.push((b, sup));
        }
    }
    let fit = fit_decay_exponent(&samples)?;
    let best_constant = first;
    Ok(ConditionReport {
        kind: cond.kind.into(),
        alpha: cond.alpha,
        beta: cond.beta,
        claimed_exponent: cond.claimed,
        fit,
        best_constant,
        envelope: Some(envelope),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrix_algebra_round_trips() {
        let mut m = SymbolValue::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                m.set(
                    i,
                    j,
                    Complex64::new((i * 3 + j) as f64 + 1.0, ((i + j) as f64).sin()),
                );
            }
        }
        m.set(0, 0, Complex64::new(5.0, 1.0)); // keep it nonsingular
        let inv = m.inverse().expect("invertible");
        let prod = m.mul(&inv);
        let err = prod.sub(&SymbolValue::identity(3)).max_abs();
        assert!(err < 1e-12, "inverse error {err}");
        // det of the identity
        assert!((SymbolValue::identity(4).det() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn four_by_four_inverse_works() {
        let mut m = SymbolValue::identity(4);
        m.set(0, 3, Complex64::new(2.0, -1.0));
        m.set(2, 1, Complex64::new(0.5, 0.5));
        m.set(3, 3, Complex64::new(3.0, 0.0));
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).sub(&SymbolValue::identity(4)).max_abs() < 1e-13);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let mut m = SymbolValue::zeros(2);
        m.set(0, 0, Complex64::new(1.0, 0.0));
        m.set(0, 1, Complex64::new(2.0, 0.0));
        m.set(1, 0, Complex64::new(2.0, 0.0));
        m.set(1, 1, Complex64::new(4.0, 0.0));
        assert!(m.inverse().is_none());
    }

    #[test]
    fn decay_fit_recovers_exact_power_laws() {
        let mut samples = Vec::new();
        for j in 1..=8 {
            for i in 0..10 {
                let b = (1u64 << j) as f64 * (1.0 + i as f64 / 10.0);
                samples.push((b, 3.0 * b.powf(-1.5)));
            }
        }
        let fit = fit_decay_exponent(&samples).unwrap();
        assert!((fit.exponent.unwrap() + 1.5).abs() < 0.02, "{:?}", fit.exponent);
        assert!(fit.residual_rms < 0.05);
    }

    #[test]
    fn decay_fit_edge_cases() {
        // all zero → sentinel
        let zeros: Vec<(f64, f64)> = (0..40).map(|i| (2.0 + i as f64, 0.0)).collect();
        let fit = fit_decay_exponent(&zeros).unwrap();
        assert!(fit.all_zero && fit.exponent.is_none());
        // too few annuli → parameter error
        let narrow: Vec<(f64, f64)> = vec![(2.0, 1.0), (3.0, 1.0), (5.0, 0.5)];
        assert!(fit_decay_exponent(&narrow).is_err());
        // bad bracket → parameter error
        assert!(fit_decay_exponent(&[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn class_spec_validation() {
        let mut s = SymbolClassSpec::scalar(1.0, 1.0, 0.0, 0, 0.5);
        assert!(s.validate().is_ok());
        s.delta = 1.5;
        assert!(s.validate().is_err());
        s.delta = 0.0;
        s.x_holder = 1.0;
        assert!(s.validate().is_err());
    }
}
