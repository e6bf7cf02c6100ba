//! Anisotropic quasi-norm `|·|_a` and the dilation group behind it.
//!
//! For an anisotropy `a = (a_1, …, a_d)` with `a_i > 0` and `Σ a_i = d`, the
//! dilation matrix is `D_a(t) = diag(t^{a_1}, …, t^{a_d})` and `|ξ|_a` is the
//! unique `t > 0` with `|D_a(1/t) ξ| = 1` (Euclidean norm), extended by
//! `|0|_a = 0`. The map `t ↦ |D_a(1/t) ξ|` is strictly decreasing, so the
//! solver brackets and bisects.
//!
//! A useful consequence used throughout the crate: the anisotropic ball
//! `B_a(c, r) = {ξ : |ξ − c|_a < r}` is exactly the axis-aligned ellipsoid
//! `{ξ : |D_a(1/r)(ξ − c)| < 1}` with semi-axes `r^{a_i}`, so membership
//! tests need no root solve.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// The dilation exponents `a = (a_1, …, a_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy {
    a: Vec<f64>,
    alpha1: f64,
    alpha2: f64,
}

impl Anisotropy {
    /// Validates `a_i > 0` and `Σ a_i = d` (within `1e-12` relative).
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::domain("anisotropy must have at least one entry"));
        }
        if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::domain("anisotropy entries must be positive and finite"));
        }
        let d = a.len() as f64;
        let sum: f64 = a.iter().sum();
        if (sum - d).abs() > SUM_TOL * d {
            return Err(Error::domain(format!(
                "anisotropy entries must sum to the dimension: got {sum}, expected {d}"
            )));
        }
        let alpha1 = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let alpha2 = a.iter().cloned().fold(0.0_f64, f64::max);
        Ok(Self { a, alpha1, alpha2 })
    }

    /// The isotropic case `a = (1, …, 1)`, for which `|·|_a` is Euclidean.
    pub fn isotropic(dim: usize) -> Self {
        Self::new(vec![1.0; dim]).expect("isotropic anisotropy is always valid")
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.a
    }

    /// Smallest entry of `a`.
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    /// Largest entry of `a`.
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
}

/// Quasi-norm evaluator: anisotropy, solver tolerance, and the empirical
/// quasi-triangle constant once [`QuasiNormContext::estimate_k`] has run.
///
/// Immutable after the estimate; every operation is pure and can be called
/// concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNormContext {
    aniso: Anisotropy,
    root_tol: f64,
    k_est: Option<f64>,
}

/// Serialized form: `{"a": [..], "root_tol": x}` plus the estimate when present.
#[derive(Serialize, Deserialize)]
struct ContextRepr {
    a: Vec<f64>,
    root_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k_est: Option<f64>,
}

impl Serialize for QuasiNormContext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ContextRepr {
            a: self.aniso.a.clone(),
            root_tol: self.root_tol,
            k_est: self.k_est,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuasiNormContext {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ContextRepr::deserialize(d)?;
        let aniso = Anisotropy::new(repr.a).map_err(serde::de::Error::custom)?;
        let mut ctx =
            QuasiNormContext::new(aniso, repr.root_tol).map_err(serde::de::Error::custom)?;
        ctx.k_est = repr.k_est;
        Ok(ctx)
    }
}

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

impl QuasiNormContext {
    /// `root_tol` is the relative tolerance of the quasi-norm bisection and
    /// must lie in `(0, 1e-6]`.
    pub fn new(aniso: Anisotropy, root_tol: f64) -> Result<Self> {
        if !(root_tol > 0.0 && root_tol <= 1e-6) {
            return Err(Error::domain(format!(
                "root_tol must lie in (0, 1e-6], got {root_tol}"
            )));
        }
        Ok(Self { aniso, root_tol, k_est: None })
    }

    pub fn with_default_tol(aniso: Anisotropy) -> Self {
        Self::new(aniso, DEFAULT_ROOT_TOL).expect("default tolerance is valid")
    }

    pub fn aniso(&self) -> &Anisotropy {
        &self.aniso
    }

    pub fn dim(&self) -> usize {
        self.aniso.dim()
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    /// The stored quasi-triangle constant, if estimated.
    pub fn k_est(&self) -> Option<f64> {
        self.k_est
    }

    /// The stored quasi-triangle constant, required.
    pub fn k(&self) -> Result<f64> {
        self.k_est
            .ok_or_else(|| Error::domain("quasi-triangle constant not estimated; call estimate_k"))
    }

    /// Diagonal of `D_a(t)`, i.e. `(t^{a_1}, …, t^{a_d})`. Requires `t > 0`.
    pub fn dilation(&self, t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("dilation parameter must be positive, got {t}")));
        }
        Ok(self.aniso.a.iter().map(|&ai| t.powf(ai)).collect())
    }

    /// `|D_a(1/t) v|` — the Euclidean norm of the inversely dilated vector.
    ///
    /// Strictly decreasing in `t` for `v ≠ 0`; the quasi-norm is its root at
    /// level 1. Also the exact membership functional of anisotropic balls:
    /// `|v|_a < t ⇔ scaled_euclid(v, t) < 1`.
    pub fn scaled_euclid(&self, v: &[f64], t: f64) -> f64 {
        let mut sum = 0.0;
        for (vi, &ai) in v.iter().zip(&self.aniso.a) {
            let s = vi / t.powf(ai);
            sum += s * s;
        }
        sum.sqrt()
    }

    /// The anisotropic quasi-norm `|ξ|_a`.
    ///
    /// Returns `0` for `ξ = 0`; otherwise brackets the root of
    /// `t ↦ |D_a(1/t) ξ| − 1` starting from `[min, max]` of
    /// `|ξ|^{1/α_1}, |ξ|^{1/α_2}`, widening by factors of 2 until the signs
    /// straddle, then bisects to relative width `root_tol`.
    pub fn aniso_norm(&self, xi: &[f64]) -> Result<f64> {
        self.check_point(xi)?;
        let e = euclid(xi);
        if e == 0.0 {
            return Ok(0.0);
        }
        let b1 = e.powf(1.0 / self.aniso.alpha1);
        let b2 = e.powf(1.0 / self.aniso.alpha2);
        let mut lo = b1.min(b2);
        let mut hi = b1.max(b2);
        if !lo.is_finite() || lo <= 0.0 {
            lo = f64::MIN_POSITIVE.sqrt();
        }
        if !hi.is_finite() {
            hi = f64::MAX.sqrt();
        }
        // Residual is ≥ 0 at lo and ≤ 0 at hi once the bracket is valid.
        let mut guard = 0;
        while self.scaled_euclid(xi, lo) < 1.0 {
            lo /= 2.0;
            guard += 1;
            if guard > 2048 {
                return Err(Error::domain("quasi-norm bracket failed to close from below"));
            }
        }
        guard = 0;
        while self.scaled_euclid(xi, hi) > 1.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 2048 {
                return Err(Error::domain("quasi-norm bracket failed to close from above"));
            }
        }
        while hi - lo > self.root_tol * lo {
            let mid = 0.5 * (lo + hi);
            if self.scaled_euclid(xi, mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Bisection on a pre-validated bracket: callers guarantee
    /// `scaled_euclid(v, lo) ≥ 1 ≥ scaled_euclid(v, hi)`.
    pub(crate) fn aniso_norm_bracketed(&self, v: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > self.root_tol * lo {
            let mid = 0.5 * (lo + hi);
            if self.scaled_euclid(v, mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Quasi-distance `d(ξ, ζ) = |ξ − ζ|_a`.
    pub fn quasi_dist(&self, xi: &[f64], zeta: &[f64]) -> Result<f64> {
        if xi.len() != zeta.len() {
            return Err(Error::domain("quasi_dist arguments must share a dimension"));
        }
        let diff: Vec<f64> = xi.iter().zip(zeta).map(|(x, z)| x - z).collect();
        self.aniso_norm(&diff)
    }

    /// Empirical quasi-triangle constant.
    ///
    /// Draws `n_samples` pairs `(ξ, ζ)` log-uniformly over
    /// `|·|_a ∈ [1e-3, 1e3]`, takes the largest observed ratio
    /// `|ξ+ζ|_a / (|ξ|_a + |ζ|_a)`, multiplies by the safety factor 1.1 and
    /// stores the result (clamped below at 1, the theoretical minimum).
    pub fn estimate_k(&mut self, n_samples: usize, seed: u64) -> Result<f64> {
        if n_samples < 100 {
            return Err(Error::domain(format!(
                "estimate_k needs at least 100 samples, got {n_samples}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut max_ratio = 0.0_f64;
        let mut xi = vec![0.0; d];
        let mut zeta = vec![0.0; d];
        let mut sum = vec![0.0; d];
        for _ in 0..n_samples {
            let t_xi = log_uniform(&mut rng, 1e-3, 1e3);
            let t_zeta = log_uniform(&mut rng, 1e-3, 1e3);
            let u = sample_direction(&mut rng, d);
            let v = sample_direction(&mut rng, d);
            self.point_with_norm_into(t_xi, &u, &mut xi);
            self.point_with_norm_into(t_zeta, &v, &mut zeta);
            for i in 0..d {
                sum[i] = xi[i] + zeta[i];
            }
            let num = self.aniso_norm(&sum)?;
            let ratio = num / (t_xi + t_zeta);
            if ratio > max_ratio {
                max_ratio = ratio;
            }
        }
        let k = (1.1 * max_ratio).max(1.0);
        self.k_est = Some(k);
        Ok(k)
    }

    /// `D_a(t) u` for a unit Euclidean vector `u`, which has `|·|_a` exactly `t`.
    pub fn point_with_norm(&self, t: f64, unit_dir: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; unit_dir.len()];
        self.point_with_norm_into(t, unit_dir, &mut out);
        out
    }

    fn point_with_norm_into(&self, t: f64, unit_dir: &[f64], out: &mut [f64]) {
        for ((o, &u), &ai) in out.iter_mut().zip(unit_dir).zip(&self.aniso.a) {
            *o = t.powf(ai) * u;
        }
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::domain(format!(
                "point dimension {} does not match anisotropy dimension {}",
                xi.len(),
                self.dim()
            )));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("quasi-norm input must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

/// Uniform direction on the Euclidean unit sphere (Box–Muller Gaussians,
/// normalized). In one dimension this is ±1.
pub(crate) fn sample_direction<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = euclid(&v);
        if n > 1e-12 {
            for x in &mut v {
                *x /= n;
            }
            return v;
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
