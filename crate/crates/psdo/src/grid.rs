//! Truncated periodic grids and the Fourier conventions used everywhere else.
//!
//! The spatial box is `[-πL, πL)^n` with `P` lattice points per axis
//! (`P` a power of two) and spacing `h = 2πL/P`; the dual lattice is
//! `ξ_m = m/L` for `m = -P/2, …, P/2-1` per axis. The forward transform is the
//! quadrature approximation of the continuum Fourier integral,
//!
//! ```text
//! û(ξ_m) = h^n Σ_k e^{-i x_k·ξ_m} u(x_k),
//! u(x_k) = (2πL)^{-n} Σ_m e^{i x_k·ξ_m} û(ξ_m),
//! ```
//!
//! so that `u ↦ û ↦ u` round-trips exactly and Plancherel holds with the
//! measure `đξ = (2π)^{-n} dξ`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::util::{i_pow, neg_i_pow, par_collect, Multi, Point, MAX_DIM};

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`, the standard smooth weight on frequency space.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// A truncated periodic lattice: dimension, points per axis, and box scale `L`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    scale: f64,
}

impl Grid {
    /// Create a grid on `[-πL, πL)^dim` with `points` lattice sites per axis.
    ///
    /// `points` must be a power of two (≥ 8 so the dual lattice has room for
    /// dyadic annuli) and `dim ∈ {1, 2}`.
    pub fn new(dim: usize, points: usize, scale: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Parameter(format!("dim must be 1 or 2, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two ≥ 8, got {points}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!("box scale must be positive, got {scale}")));
        }
        Ok(Grid { dim, points, scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// The box scale `L`; the box is `[-πL, πL)^dim`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Total number of lattice sites `P^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing `h = 2πL/P`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.scale / self.points as f64
    }

    /// Dual-lattice spacing `1/L`.
    pub fn freq_step(&self) -> f64 {
        1.0 / self.scale
    }

    /// Largest resolved frequency magnitude per axis, `P/(2L)`.
    pub fn nyquist(&self) -> f64 {
        self.points as f64 / (2.0 * self.scale)
    }

    /// Quadrature weight `h^dim` of the trapezoid rule on the periodic box.
    pub fn quadrature_weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Spatial coordinates per axis, `x_k = -πL + k·h`.
    pub fn x_axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|k| -PI * self.scale + k as f64 * h).collect()
    }

    /// Frequency coordinates per axis in storage order, `ξ_j = (j - P/2)/L`.
    pub fn xi_axis(&self) -> Vec<f64> {
        (0..self.points)
            .map(|j| (j as f64 - self.points as f64 / 2.0) * self.freq_step())
            .collect()
    }

    /// Decompose a flat lattice index into per-axis indices (axis 0 slowest).
    pub fn unflatten(&self, flat: usize) -> [usize; MAX_DIM] {
        debug_assert!(flat < self.len());
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    /// Flatten per-axis indices (inverse of [`Grid::unflatten`]).
    pub fn flatten(&self, idx: &[usize; MAX_DIM]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.points + idx[1],
        }
    }

    /// Spatial point at a flat lattice index.
    pub fn x_point(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = -PI * self.scale + idx[a] as f64 * h;
        }
        p
    }

    /// Frequency point at a flat dual-lattice index.
    pub fn xi_point(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = (idx[a] as f64 - self.points as f64 / 2.0) * self.freq_step();
        }
        p
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

/// Complex values on the spatial lattice, possibly with several components.
///
/// Storage is component-major: component `c` occupies
/// `values[c·len .. (c+1)·len]`, row-major over axes inside the block.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub components: usize,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        GridFunction {
            grid,
            components,
            values: vec![Complex64::new(0.0, 0.0); components * grid.len()],
        }
    }

    /// Sample a scalar closure on the lattice.
    pub fn from_scalar_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(Point) -> Complex64 + Sync + Send,
    {
        let values = par_collect(grid.len(), |k| f(grid.x_point(k)));
        GridFunction { grid, components: 1, values }
    }

    /// Sample a componentwise closure `f(component, x)` on the lattice.
    pub fn from_fn<F>(grid: Grid, components: usize, f: F) -> Self
    where
        F: Fn(usize, Point) -> Complex64 + Sync + Send,
    {
        let n = grid.len();
        let values = par_collect(components * n, |i| f(i / n, grid.x_point(i % n)));
        GridFunction { grid, components, values }
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Quadrature `L²` norm over the box (all components).
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.quadrature_weight();
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Forward transform of every component.
    pub fn forward(&self) -> SpectralFunction {
        let mut coeffs = self.values.clone();
        let n = self.grid.len();
        for c in 0..self.components {
            transform_block(&self.grid, &mut coeffs[c * n..(c + 1) * n], true);
        }
        SpectralFunction {
            grid: self.grid,
            components: self.components,
            coeffs,
        }
    }
}

/// Fourier coefficients on the dual lattice, same layout as [`GridFunction`]
/// with axis index `j ↔ m = j - P/2`, `ξ = m/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub grid: Grid,
    pub components: usize,
    pub coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    /// Inverse transform of every component.
    pub fn inverse(&self) -> GridFunction {
        let mut values = self.coeffs.clone();
        let n = self.grid.len();
        for c in 0..self.components {
            transform_block(&self.grid, &mut values[c * n..(c + 1) * n], false);
        }
        GridFunction {
            grid: self.grid,
            components: self.components,
            values,
        }
    }

    /// Multiply every component pointwise by `g(ξ)`.
    pub fn scale_by<F>(&mut self, g: F)
    where
        F: Fn(Point) -> Complex64 + Sync + Send,
    {
        let n = self.grid.len();
        let grid = self.grid;
        let factors = par_collect(n, |k| g(grid.xi_point(k)));
        for c in 0..self.components {
            let block = &mut self.coeffs[c * n..(c + 1) * n];
            for (v, f) in block.iter_mut().zip(&factors) {
                *v *= f;
            }
        }
    }

    /// `(Σ_m w(ξ_m)·|û(ξ_m)|²·(2πL)^{-n})^{1/2}` over all components.
    pub fn weighted_l2<F>(&self, w: F) -> f64
    where
        F: Fn(Point) -> f64,
    {
        let n = self.grid.len();
        let measure = (2.0 * PI * self.grid.scale()).powi(self.grid.dim() as i32).recip();
        let mut total = 0.0;
        for c in 0..self.components {
            for (k, z) in self.coeffs[c * n..(c + 1) * n].iter().enumerate() {
                total += w(self.grid.xi_point(k)) * z.norm_sqr();
            }
        }
        (total * measure).sqrt()
    }
}

/// In-place forward/inverse transform of one component block with the grid's
/// normalization and phase conventions.
fn transform_block(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let p = grid.points_per_axis();
    let fft = plan(p, forward);
    let h = grid.spacing();
    let inv_norm = 1.0 / (2.0 * PI * grid.scale());
    let mut line = vec![Complex64::new(0.0, 0.0); p];

    let axes = grid.dim();
    for axis in 0..axes {
        // stride pattern: axis 0 is slow (stride = P for dim 2), axis 1 contiguous
        let (lines, stride, line_step) = match (grid.dim(), axis) {
            (1, _) => (1usize, 1usize, 0usize),
            (2, 0) => (p, p, 1),  // columns: start varies over fast index
            (2, 1) => (p, 1, p),  // rows: start varies over slow index
            _ => unreachable!(),
        };
        for l in 0..lines {
            let start = l * line_step;
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = data[start + t * stride];
            }
            transform_line(&fft, &mut line, h, inv_norm, forward);
            for (t, slot) in line.iter().enumerate() {
                data[start + t * stride] = *slot;
            }
        }
    }
}

/// One 1-D pass: `c_j = h·(-1)^m·X[m mod P]` (forward) or its inverse.
fn transform_line(
    fft: &Arc<dyn Fft<f64>>,
    line: &mut [Complex64],
    h: f64,
    inv_norm: f64,
    forward: bool,
) {
    let p = line.len();
    let half = p / 2;
    if forward {
        fft.process(line);
        // reorder X[q] → c_j (j ↔ m = j - P/2, q = m mod P) with phase (-1)^m
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        for j in 0..p {
            let q = (j + half) % p; // = m mod P
            let sign = if (j + half) % 2 == 0 { 1.0 } else { -1.0 };
            out[j] = line[q] * (h * sign);
        }
        line.copy_from_slice(&out);
    } else {
        // build Z[q] = (-1)^q · c[(q + P/2) mod P], then unnormalized inverse FFT
        let mut z = vec![Complex64::new(0.0, 0.0); p];
        for q in 0..p {
            let j = (q + half) % p;
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            z[q] = line[j] * sign;
        }
        fft.process(&mut z);
        for (slot, v) in line.iter_mut().zip(z) {
            *slot = v * inv_norm;
        }
    }
}

/// Apply the Bessel multiplier `⟨D⟩^s` (Fourier multiplier `⟨ξ⟩^s`).
pub fn bessel_multiplier(u: &GridFunction, s: f64) -> GridFunction {
    let dim = u.grid.dim();
    let mut spec = u.forward();
    spec.scale_by(|xi| Complex64::new(bracket(&xi[..dim]).powf(s), 0.0));
    spec.inverse()
}

/// Discrete Sobolev norm `‖u‖_{H^s} = ‖⟨ξ⟩^s û‖_{L²(đξ)}` (p = 2, Plancherel).
pub fn sobolev_norm(u: &GridFunction, s: f64) -> f64 {
    let spec = u.forward();
    let dim = u.grid.dim();
    spec.weighted_l2(|xi| bracket(&xi[..dim]).powf(2.0 * s))
}

/// Spectral partial derivative `∂^α u` (multiplier `(iξ)^α`).
pub fn partial_derivative(u: &GridFunction, alpha: &Multi) -> GridFunction {
    let a = *alpha;
    let dim = u.grid.dim();
    let mut spec = u.forward();
    spec.scale_by(|xi| {
        let mut f = i_pow(a[0] + a[1]);
        for ax in 0..dim {
            f *= Complex64::new(xi[ax].powi(a[ax] as i32), 0.0);
        }
        f
    });
    spec.inverse()
}

/// Spectral derivative `D^α u = (-i∂)^α u` (multiplier `ξ^α`).
pub fn d_derivative(u: &GridFunction, alpha: &Multi) -> GridFunction {
    let a = *alpha;
    let dim = u.grid.dim();
    let mut spec = u.forward();
    spec.scale_by(|xi| {
        let mut f = Complex64::new(1.0, 0.0);
        for ax in 0..dim {
            f *= Complex64::new(xi[ax].powi(a[ax] as i32), 0.0);
        }
        f
    });
    spec.inverse()
}

/// Consistency helper used by tests: `D^α` and `∂^α` differ by `(-i)^{|α|}`.
pub fn derivative_phase(alpha: &Multi) -> Complex64 {
    neg_i_pow(alpha[0] + alpha[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn plane_wave(grid: Grid, m: i64) -> GridFunction {
        let xi = m as f64 * grid.freq_step();
        GridFunction::from_scalar_fn(grid, |x| (Complex64::new(0.0, 1.0) * x[0] * xi).exp())
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::new(0, 64, 1.0).is_err());
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 48, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(1, 64, 0.0).is_err());
        assert!(Grid::new(2, 64, 2.0).is_ok());
    }

    #[test]
    fn lattice_coordinates_match_conventions() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let xs = g.x_axis();
        assert_relative_eq!(xs[0], -2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(xs[1] - xs[0], g.spacing(), max_relative = 1e-15);
        let xis = g.xi_axis();
        assert_relative_eq!(xis[0], -4.0, max_relative = 1e-15); // -P/(2L) = -16/4
        assert_relative_eq!(xis[8], 0.0, max_relative = 1e-15);
        assert_relative_eq!(g.nyquist(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn forward_of_resolved_plane_wave_is_a_delta() {
        let grid = Grid::new(1, 64, 1.5).unwrap();
        let m0: i64 = 5;
        let spec = plane_wave(grid, m0).forward();
        let mass = 2.0 * PI * grid.scale();
        for (j, c) in spec.coeffs.iter().enumerate() {
            let m = j as i64 - 32;
            if m == m0 {
                assert!((c - Complex64::new(mass, 0.0)).norm() < 1e-12 * mass);
            } else {
                assert!(c.norm() < 1e-12 * mass, "leak at m={m}: {c}");
            }
        }
    }

    #[test]
    fn roundtrip_is_exact_1d_and_2d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(dim, p) in &[(1usize, 128usize), (2, 16)] {
            let grid = Grid::new(dim, p, 1.0).unwrap();
            let mut u = GridFunction::zeros(grid, 2);
            for v in u.values.iter_mut() {
                *v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let back = u.forward().inverse();
            let err = u
                .values
                .iter()
                .zip(&back.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "dim={dim} roundtrip error {err}");
        }
    }

    #[test]
    fn parseval_holds_for_seeded_random_functions() {
        let grid = Grid::new(1, 256, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let mut u = GridFunction::zeros(grid, 1);
            for v in u.values.iter_mut() {
                *v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let space = u.l2_norm();
            let freq = u.forward().weighted_l2(|_| 1.0);
            assert_relative_eq!(space, freq, max_relative = 1e-12);
        }
    }

    #[test]
    fn bessel_multipliers_compose_additively() {
        let grid = Grid::new(1, 128, 1.0).unwrap();
        let u = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.3 * x[0].sin())
        });
        let twice = bessel_multiplier(&bessel_multiplier(&u, 0.7), -1.9);
        let once = bessel_multiplier(&u, 0.7 - 1.9);
        let err = twice
            .values
            .iter()
            .zip(&once.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = once.sup_norm().max(1.0);
        assert!(err < 1e-10 * scale, "group-law error {err}");
    }

    #[test]
    fn sobolev_norm_shifts_under_bessel_multiplier() {
        let grid = Grid::new(1, 128, 1.0).unwrap();
        let u = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new((-x[0] * x[0]).exp(), x[0].cos())
        });
        let lhs = sobolev_norm(&bessel_multiplier(&u, 1.3), 0.4);
        let rhs = sobolev_norm(&u, 1.7);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        // monotone in s because ⟨ξ⟩ ≥ 1
        assert!(sobolev_norm(&u, 0.0) <= sobolev_norm(&u, 0.5));
        assert!(sobolev_norm(&u, 0.5) <= sobolev_norm(&u, 2.0));
        assert_relative_eq!(sobolev_norm(&u, 0.0), u.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn spectral_derivative_matches_analytic_derivative() {
        let grid = Grid::new(1, 256, 1.0).unwrap();
        // trigonometric polynomial: derivatives are exact on the lattice
        let u = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new((3.0 * x[0]).sin(), (5.0 * x[0]).cos())
        });
        let du = partial_derivative(&u, &[1, 0]);
        let exact = GridFunction::from_scalar_fn(grid, |x| {
            Complex64::new(3.0 * (3.0 * x[0]).cos(), -5.0 * (5.0 * x[0]).sin())
        });
        let err = du
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "derivative error {err}");
        // D^α = (-i)^{|α|} ∂^α
        let d1 = d_derivative(&u, &[1, 0]);
        let phase = derivative_phase(&[1, 0]);
        let err2 = d1
            .values
            .iter()
            .zip(&du.values)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max);
        assert!(err2 < 1e-12);
    }

    #[test]
    fn gaussian_transform_matches_analytic_and_brute_force() {
        // box large enough that the periodization tail is far below 1e-12
        let grid = Grid::new(1, 256, 4.0).unwrap();
        let u = GridFunction::from_scalar_fn(grid, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let spec = u.forward();
        // independent oracle: plain trapezoid sum on a 4× finer, offset lattice
        let fine = 4 * grid.points_per_axis();
        let hf = 2.0 * PI * grid.scale() / fine as f64;
        let brute = |xi: f64| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..fine {
                let x = -PI * grid.scale() + k as f64 * hf;
                s += Complex64::new((-x * x / 2.0).exp(), 0.0)
                    * (Complex64::new(0.0, -1.0) * x * xi).exp();
            }
            s * hf
        };
        for &m in &[0i64, 1, 4, -7, 16] {
            let j = (m + 128) as usize;
            let xi = m as f64 * grid.freq_step();
            let analytic = (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp();
            assert!(
                (spec.coeffs[j] - Complex64::new(analytic, 0.0)).norm() < 1e-12,
                "m={m}: fft {} vs analytic {analytic}",
                spec.coeffs[j]
            );
            assert!((spec.coeffs[j] - brute(xi)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_transform_separates() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let u = GridFunction::from_scalar_fn(grid, |x| {
            (Complex64::new(0.0, 1.0) * (3.0 * x[0] - 2.0 * x[1])).exp()
        });
        let spec = u.forward();
        let mass = (2.0 * PI * grid.scale()).powi(2);
        let target = grid.flatten(&[(3 + 16) as usize, (-2 + 16) as usize]);
        for (k, c) in spec.coeffs.iter().enumerate() {
            if k == target {
                assert!((c - Complex64::new(mass, 0.0)).norm() < 1e-11 * mass);
            } else {
                assert!(c.norm() < 1e-11 * mass);
            }
        }
    }
}
