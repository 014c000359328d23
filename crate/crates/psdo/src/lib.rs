//! Numerical pseudodifferential-operator calculus on truncated periodic grids.
//!
//! The crate discretizes operators of the form
//!
//! ```text
//! op(a) u(x) = ∫ e^{i x·ξ} a(x, ξ) û(ξ) đξ,        đξ = (2π)^{-n} dξ,
//! ```
//!
//! on a periodic box `[-πL, πL)^n` with a power-of-two lattice, and provides the
//! analysis tooling needed to work with *rough* (finitely Hölder-regular) symbols:
//!
//! * [`grid`] — lattice/Fourier conventions, Bessel multipliers `⟨D⟩^s`, Sobolev norms;
//! * [`holder`] — Hölder norm estimation on grid data;
//! * [`symbol`] — symbol objects with derivative oracles, decay-class specifications,
//!   and an empirical class verifier that fits ξ-decay exponents on dyadic annuli;
//! * [`gallery`] — built-in symbols, windows, and test amplitudes;
//! * [`dyadic`] — radial cutoffs, dyadic frequency bands, and mollifiers `φ(εD)`;
//! * [`smoothing`] — the dyadic symbol split `a = a_smooth + a_rough` with per-band
//!   mollification scales `ε_j = 2^{-jγ}`, plus order verification for both parts;
//! * [`oscint`] — regularized oscillatory integrals `∬ e^{-iy·η} a(y,η) dy đη` with
//!   integration-by-parts regularizers and ε-extrapolated damped quadrature;
//! * [`calculus`] — dense quantization, double-symbol quantization, left-symbol
//!   reduction, composition expansions with two-route remainders, and Sobolev
//!   boundedness probes;
//! * [`fredholm`] — ellipticity scans, cutoff parametrices, SVD-based compactness
//!   proxies, and index experiments;
//! * [`report`] — serializable report types shared by the above.
//!
//! Heavy sweeps use [rayon] when the default `parallel` feature is enabled and fall
//! back to sequential loops otherwise; results are bitwise-identical either way
//! because reductions run over fixed chunk boundaries in index order.

pub mod calculus;
pub mod dyadic;
pub mod error;
pub mod fredholm;
pub mod gallery;
pub mod grid;
pub mod holder;
pub mod oscint;
pub mod report;
pub mod smoothing;
pub mod symbol;
pub mod util;

pub use error::{Error, Result};
pub use util::{Multi, Point};
