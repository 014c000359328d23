//! Small shared helpers: points, multi-indices, deterministic parallel loops.

use num_complex::Complex64;

/// Maximum supported space dimension. All point/multi-index storage is fixed
/// size; entries beyond the active dimension stay zero.
pub const MAX_DIM: usize = 2;

/// A point in `ℝ^n` (`n ≤ 2`); unused trailing coordinates are zero.
pub type Point = [f64; MAX_DIM];

/// A multi-index in `ℕ_0^n`; unused trailing entries are zero.
pub type Multi = [usize; MAX_DIM];

pub const ZERO_MULTI: Multi = [0, 0];

/// Order `|α| = α_1 + … + α_n` of a multi-index.
pub fn multi_order(alpha: &Multi) -> usize {
    alpha[0] + alpha[1]
}

/// Factorial `α! = α_1!·α_2!`.
pub fn multi_factorial(alpha: &Multi) -> f64 {
    factorial(alpha[0]) * factorial(alpha[1])
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Binomial coefficient as `f64` (small arguments only).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All multi-indices of the given exact order in `dim` variables.
pub fn multis_of_order(dim: usize, order: usize) -> Vec<Multi> {
    let mut out = Vec::new();
    if dim == 1 {
        out.push([order, 0]);
    } else {
        for a0 in 0..=order {
            out.push([a0, order - a0]);
        }
    }
    out
}

/// All multi-indices with order `< strict_bound` in `dim` variables, ordered by
/// total order then lexicographically.
pub fn multis_below(dim: usize, strict_bound: usize) -> Vec<Multi> {
    (0..strict_bound)
        .flat_map(|k| multis_of_order(dim, k))
        .collect()
}

pub fn add_multi(a: &Multi, b: &Multi) -> Multi {
    [a[0] + b[0], a[1] + b[1]]
}

/// Componentwise `a ≤ b`.
pub fn multi_le(a: &Multi, b: &Multi) -> bool {
    a[0] <= b[0] && a[1] <= b[1]
}

/// Euclidean norm of the active coordinates.
pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(-i)^k` — the phase picked up by `D^α = (-i∂)^α`.
pub fn neg_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `i^k`.
pub fn i_pow(k: usize) -> Complex64 {
    neg_i_pow(k).conj()
}

/// Nodes and weights of the 8-point Gauss–Legendre rule on `[0, 1]`.
///
/// Exact for polynomials up to degree 15; the values are the classical
/// `[-1, 1]` abscissae/weights mapped by `t ↦ (t+1)/2`.
pub fn gauss_legendre_8() -> [(f64, f64); 8] {
    const X: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329_,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const W: [f64; 8] = [
        0.101_228_536_290_376_26,
        0.222_381_034_453_374_47,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362_,
        0.362_683_783_378_362_,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_47,
        0.101_228_536_290_376_26,
    ];
    let mut out = [(0.0, 0.0); 8];
    for i in 0..8 {
        out[i] = ((X[i] + 1.0) / 2.0, W[i] / 2.0);
    }
    out
}

/// Map `f` over `0..n`, collecting results in index order. Runs on the rayon
/// pool when the `parallel` feature is on; output is identical either way.
pub fn par_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic parallel reduction of `Σ_{i<n} f(i)` over complex values.
///
/// The index range is cut at fixed 8192-element boundaries; each chunk is summed
/// sequentially and the chunk partials are added in chunk order, so the result
/// does not depend on thread count or scheduling.
pub fn par_sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    const CHUNK: usize = 8192;
    let chunks = n.div_ceil(CHUNK);
    let partials = par_collect(chunks, |c| {
        let lo = c * CHUNK;
        let hi = ((c + 1) * CHUNK).min(n);
        let mut s = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            s += f(i);
        }
        s
    });
    partials.into_iter().sum()
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// `C^∞` monotone step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, built from
/// `f(u) = e^{-1/u}` as `f(u) / (f(u) + f(1-u))`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let f = (-1.0 / u).exp();
        let g = (-1.0 / (1.0 - u)).exp();
        f / (f + g)
    }
}

/// First derivative of [`smooth_step`].
pub fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        let f = (-1.0 / u).exp();
        let g = (-1.0 / (1.0 - u)).exp();
        let fp = f / (u * u);
        let gp = -g / ((1.0 - u) * (1.0 - u)); // d/du f(1-u)
        (fp * g - f * gp) / ((f + g) * (f + g))
    }
}

/// `C^2` quintic step `6u^5 - 15u^4 + 10u^3`, clamped to 0 on `u ≤ 0` and
/// 1 on `u ≥ 1`.
pub fn quintic_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// First derivative of [`quintic_step`].
pub fn quintic_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_enumeration_counts() {
        assert_eq!(multis_of_order(1, 3), vec![[3, 0]]);
        assert_eq!(multis_of_order(2, 2), vec![[0, 2], [1, 1], [2, 0]]);
        assert_eq!(multis_below(2, 2).len(), 3); // (0,0), (0,1), (1,0)
        assert_eq!(multi_factorial(&[3, 2]), 12.0);
        assert_eq!(binomial(5, 2), 10.0);
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        let rule = gauss_legendre_8();
        let wsum: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        for k in 0..=15usize {
            let q: f64 = rule.iter().map(|&(t, w)| w * t.powi(k as i32)).sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!(
                (q - exact).abs() < 1e-13,
                "degree {k}: quadrature {q} vs exact {exact}"
            );
        }
    }

    #[test]
    fn chunked_sum_matches_sequential() {
        let n = 20_000;
        let f = |i: usize| Complex64::new((i as f64).sin(), (i as f64 * 0.5).cos());
        let mut seq = Complex64::new(0.0, 0.0);
        for i in 0..n {
            seq += f(i);
        }
        let par = par_sum_complex(n, f);
        // identical chunking makes this a reproducibility statement, not an
        // approximate one
        let seq_chunked = {
            let mut total = Complex64::new(0.0, 0.0);
            for c in 0..n.div_ceil(8192) {
                let mut s = Complex64::new(0.0, 0.0);
                for i in c * 8192..((c + 1) * 8192).min(n) {
                    s += f(i);
                }
                total += s;
            }
            total
        };
        assert_eq!(par, seq_chunked);
        assert!((par - seq).norm() < 1e-9);
    }

    #[test]
    fn phase_powers_cycle() {
        let i = Complex64::new(0.0, 1.0);
        for k in 0..8 {
            assert_eq!(neg_i_pow(k), (-i).powu(k as u32));
            assert_eq!(i_pow(k), i.powu(k as u32));
        }
    }
}
