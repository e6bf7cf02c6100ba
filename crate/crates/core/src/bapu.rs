//! Bounded admissible partitions of unity subordinate to a covering.
//!
//! From one bump `Φ` on the reference set (1 on the inner set, 0 outside the
//! support set) the pullbacks `g_j(ξ) = Φ(T_j^{-1} ξ)` produce both
//! normalizations:
//!
//! * `ψ_j = g_j / Σ_k g_k` with `Σ_j ψ_j = 1`,
//! * `φ_j = g_j / √(Σ_k g_k²)` with `Σ_j φ_j² = 1`,
//!
//! on the covered region. Both identities are algebraic in the computed
//! `g_k`, so the verification residuals measure only candidate-set and
//! floating-point error.

use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::anorm::{log_uniform, sample_direction, QuasiNormContext};
use crate::covering::{Covering, PatchShape, Zone};
use crate::error::{Error, Result};
use crate::fft::dft_nd;
use crate::frame::SpectralFunction;
use crate::regulation::smoothstep;

/// Reference bump `Φ`: 1 on the inner set, 0 outside the outer set, a `C^s`
/// smoothstep in between (radial in `|·|_a` for balls, tensorized for boxes).
#[derive(Debug, Clone)]
pub struct BumpFunction {
    p0: Vec<f64>,
    inner_radius: f64,
    outer_radius: f64,
    order: u32,
    shape: PatchShape,
    /// Precomputed semi-axes `inner^{a_i}`, `outer^{a_i}` of the two
    /// reference ellipsoids (ball shape).
    inner_pow: Vec<f64>,
    outer_pow: Vec<f64>,
}

pub const DEFAULT_BUMP_ORDER: u32 = 3;

impl BumpFunction {
    pub fn new(
        ctx: &QuasiNormContext,
        p0: Vec<f64>,
        inner_radius: f64,
        outer_radius: f64,
        order: u32,
        shape: PatchShape,
    ) -> Result<Self> {
        if !(inner_radius > 0.0 && outer_radius > inner_radius) {
            return Err(Error::domain("bump radii must satisfy 0 < inner < outer"));
        }
        if order < 3 {
            return Err(Error::domain("bump order must be at least 3"));
        }
        let a = ctx.aniso().exponents();
        Ok(Self {
            p0,
            inner_radius,
            outer_radius,
            order,
            shape,
            inner_pow: a.iter().map(|&ai| inner_radius.powf(ai)).collect(),
            outer_pow: a.iter().map(|&ai| outer_radius.powf(ai)).collect(),
        })
    }

    /// The bump matching a covering's reference sets.
    pub fn for_covering(c: &Covering, order: u32) -> Result<Self> {
        Self::new(c.ctx(), c.p0().to_vec(), 1.0, c.outer_factor(), order, c.shape())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn shape(&self) -> PatchShape {
        self.shape
    }

    /// `Φ(ζ)` in reference coordinates.
    pub fn eval(&self, ctx: &QuasiNormContext, zeta: &[f64]) -> f64 {
        let d = zeta.len();
        match self.shape {
            PatchShape::Ball => {
                // |w|_a ≤ inner and |w|_a ≥ outer resolve without a root
                // solve through the ellipsoid membership functionals.
                let mut e_in = 0.0;
                let mut e_out = 0.0;
                for i in 0..d {
                    let wi = zeta[i] - self.p0[i];
                    let vi = wi / self.inner_pow[i];
                    e_in += vi * vi;
                    let vo = wi / self.outer_pow[i];
                    e_out += vo * vo;
                }
                if e_in <= 1.0 {
                    return 1.0;
                }
                if e_out >= 1.0 {
                    return 0.0;
                }
                let w: Vec<f64> =
                    zeta.iter().zip(&self.p0).map(|(z, p)| z - p).collect();
                let u = ctx.aniso_norm_bracketed(&w, self.inner_radius, self.outer_radius);
                1.0 - smoothstep(
                    self.order,
                    (u - self.inner_radius) / (self.outer_radius - self.inner_radius),
                )
            }
            PatchShape::Box => {
                let mut prod = 1.0;
                for i in 0..d {
                    let x = (zeta[i] - self.p0[i]).abs();
                    if x >= self.outer_radius {
                        return 0.0;
                    }
                    if x > self.inner_radius {
                        prod *= 1.0
                            - smoothstep(
                                self.order,
                                (x - self.inner_radius)
                                    / (self.outer_radius - self.inner_radius),
                            );
                    }
                }
                prod
            }
        }
    }
}

/// Residuals of the two partition identities over a sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PouReport {
    pub max_psi_residual: f64,
    pub max_phi2_residual: f64,
}

/// Frequency-domain multiplier variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierMode {
    /// `ψ_j · f̂`
    Psi,
    /// `φ_j² · f̂`
    Phi2,
    /// `φ̃_j² · f̂` with `φ̃_j² = Σ_{k ∈ ñ(j)} φ_k²`
    Phi2Tilde,
}

/// A covering together with its partition of unity.
#[derive(Clone)]
pub struct Bapu {
    covering: Arc<Covering>,
    bump: BumpFunction,
}

impl Bapu {
    pub fn new(covering: Arc<Covering>, order: u32) -> Result<Self> {
        let bump = BumpFunction::for_covering(&covering, order)?;
        Ok(Self { covering, bump })
    }

    pub fn covering(&self) -> &Arc<Covering> {
        &self.covering
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    pub fn ctx(&self) -> &QuasiNormContext {
        self.covering.ctx()
    }

    pub fn dim(&self) -> usize {
        self.covering.dim()
    }

    /// `g_j(ξ) = Φ(T_j^{-1} ξ)`, zero outside `Q_j`.
    pub fn patch_bump(&self, j: usize, xi: &[f64]) -> f64 {
        let v = self.covering.reference_coords(j, xi);
        self.bump.eval(self.ctx(), &v)
    }

    /// All nonzero `g_k(ξ)` among the given candidate patches.
    fn bump_values_among(&self, candidates: &[usize], xi: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(candidates.len());
        for &k in candidates {
            if !self.covering.contains(k, xi, Zone::Support) {
                continue;
            }
            let g = self.patch_bump(k, xi);
            if g > 0.0 {
                out.push((k, g));
            }
        }
        out
    }

    /// All nonzero `g_k(ξ)` (candidates found by bounding-box scan).
    pub fn bump_values(&self, xi: &[f64]) -> Vec<(usize, f64)> {
        let mut cand = Vec::new();
        self.covering.candidates_into(xi, &mut cand);
        self.bump_values_among(&cand, xi)
    }

    /// `ψ_j(ξ) = g_j / Σ_k g_k`. Errors when `ξ` lies outside the covered
    /// region (vanishing denominator would otherwise be silent).
    pub fn psi_eval(&self, j: usize, xi: &[f64]) -> Result<f64> {
        self.covering.patch(j)?;
        let values = self.bump_values(xi);
        let total: f64 = values.iter().map(|(_, g)| g).sum();
        if total <= 0.0 {
            return Err(Error::domain("point is outside the covered annulus"));
        }
        Ok(values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, g)| g / total))
    }

    /// `φ_j(ξ) = g_j / √(Σ_k g_k²)`, with the same domain contract.
    pub fn phi_eval(&self, j: usize, xi: &[f64]) -> Result<f64> {
        self.covering.patch(j)?;
        let values = self.bump_values(xi);
        let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
        if sq <= 0.0 {
            return Err(Error::domain("point is outside the covered annulus"));
        }
        Ok(values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, g)| g / sq.sqrt()))
    }

    /// All nonzero `φ_k(ξ)`; empty when uncovered (no error). Internal paths
    /// (frames, multipliers) use this so integrands vanish off-support.
    pub fn phi_values(&self, xi: &[f64]) -> Vec<(usize, f64)> {
        let values = self.bump_values(xi);
        let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
        if sq <= 0.0 {
            return Vec::new();
        }
        let norm = sq.sqrt();
        values.into_iter().map(|(k, g)| (k, g / norm)).collect()
    }

    /// `φ_j(ξ)` restricted to a precomputed candidate superset (must contain
    /// every patch whose support includes `ξ`). Returns 0 when uncovered.
    pub(crate) fn phi_among(&self, j: usize, candidates: &[usize], xi: &[f64]) -> f64 {
        let values = self.bump_values_among(candidates, xi);
        let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
        if sq <= 0.0 {
            return 0.0;
        }
        values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, g)| g / sq.sqrt())
    }

    /// Maximum partition residuals `|Σψ_j − 1|`, `|Σφ_j² − 1|` over
    /// `n_samples ≥ 10⁴` inner-annulus points. Uncovered samples count as
    /// residual 1.
    pub fn verify_pou(&self, n_samples: usize, seed: u64) -> Result<PouReport> {
        if n_samples < 10_000 {
            return Err(Error::domain("verify_pou needs at least 10^4 samples"));
        }
        let ctx = self.ctx();
        let d = self.dim();
        let (lo, hi) = self.covering.inner_annulus();
        if !(lo < hi) {
            return Err(Error::domain("inner annulus is empty"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Vec<f64>> = (0..n_samples)
            .map(|_| {
                let t = log_uniform(&mut rng, lo, hi);
                let u = sample_direction(&mut rng, d);
                ctx.point_with_norm(t, &u)
            })
            .collect();
        let residuals: Vec<(f64, f64)> = samples
            .par_iter()
            .map(|xi| {
                let values = self.bump_values(xi);
                let total: f64 = values.iter().map(|(_, g)| g).sum();
                if total <= 0.0 {
                    return (1.0, 1.0);
                }
                let psi_sum: f64 = values.iter().map(|(_, g)| g / total).sum();
                let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
                let norm = sq.sqrt();
                let phi2_sum: f64 = values
                    .iter()
                    .map(|(_, g)| {
                        let phi = g / norm;
                        phi * phi
                    })
                    .sum();
                ((psi_sum - 1.0).abs(), (phi2_sum - 1.0).abs())
            })
            .collect();
        let max_psi = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
        let max_phi2 = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        Ok(PouReport { max_psi_residual: max_psi, max_phi2_residual: max_phi2 })
    }

    /// Frequency-domain multiplier `m_j · f̂` as a new evaluator, with the
    /// support hint narrowed to the patch shell (union of neighbor shells in
    /// the tilde mode).
    pub fn multiplier_apply(
        &self,
        j: usize,
        f: &SpectralFunction,
        mode: MultiplierMode,
    ) -> Result<SpectralFunction> {
        self.covering.patch(j)?;
        let bapu = self.clone();
        let func = f.clone();
        let neighbor_set: Vec<usize> = self.covering.neighbors()[j].clone();
        let eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync> =
            Arc::new(move |xi: &[f64]| {
                let weight = match mode {
                    MultiplierMode::Psi => {
                        let values = bapu.bump_values(xi);
                        let total: f64 = values.iter().map(|(_, g)| g).sum();
                        if total <= 0.0 {
                            return Complex64::default();
                        }
                        values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, g)| g / total)
                    }
                    MultiplierMode::Phi2 => {
                        let values = bapu.bump_values(xi);
                        let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
                        if sq <= 0.0 {
                            return Complex64::default();
                        }
                        values
                            .iter()
                            .find(|(k, _)| *k == j)
                            .map_or(0.0, |(_, g)| g * g / sq)
                    }
                    MultiplierMode::Phi2Tilde => {
                        let values = bapu.bump_values(xi);
                        let sq: f64 = values.iter().map(|(_, g)| g * g).sum();
                        if sq <= 0.0 {
                            return Complex64::default();
                        }
                        values
                            .iter()
                            .filter(|(k, _)| neighbor_set.contains(k))
                            .map(|(_, g)| g * g / sq)
                            .sum()
                    }
                };
                if weight == 0.0 {
                    Complex64::default()
                } else {
                    func.eval(xi) * weight
                }
            });
        // Shell of the support region this multiplier can reach.
        let shell = match mode {
            MultiplierMode::Phi2Tilde => {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for &k in &self.covering.neighbors()[j] {
                    let (slo, shi) = self.covering.shell(k);
                    lo = lo.min(slo);
                    hi = hi.max(shi);
                }
                (lo, hi)
            }
            _ => self.covering.shell(j),
        };
        let hint = match f.support_hint() {
            Some((flo, fhi)) => (shell.0.max(flo), shell.1.min(fhi)),
            None => shell,
        };
        let out = SpectralFunction::new(self.dim(), eval);
        // The multiplier vanishes outside its patch support by construction,
        // so the hint needs no resampling check.
        Ok(out.with_support_hint_unchecked(hint))
    }

    /// Discretized `‖F^{-1}ψ_j‖_{L₁}` computed in reference coordinates
    /// (`h_j = ψ_j ∘ T_j` keeps the `L₁` norm; dilation scaling has exponent
    /// `1 − 1/p = 0` at `p = 1`). A numerical stand-in for the uniform
    /// multiplier bound of the partition.
    pub fn psi_multiplier_l1(&self, j: usize, grid: usize, halfside: f64) -> Result<f64> {
        self.covering.patch(j)?;
        if grid < 32 {
            return Err(Error::domain("psi_multiplier_l1 needs grid ≥ 32"));
        }
        let d = self.dim();
        let m = grid;
        let dims = vec![m; d];
        let total: usize = dims.iter().product();
        let p0 = self.covering.p0().to_vec();
        let step = 2.0 * halfside / m as f64;
        // Sample h_j(ζ) = ψ_j(T_j ζ) over the reference cube [p0 ± halfside].
        let patch_map = self.covering.patches()[j].map.clone();
        let mut cube_lo = vec![0.0; d];
        let mut cube_hi = vec![0.0; d];
        for i in 0..d {
            let a = patch_map.apply(&p0)[i] - patch_map.scales()[i] * halfside;
            let b = patch_map.apply(&p0)[i] + patch_map.scales()[i] * halfside;
            cube_lo[i] = a;
            cube_hi[i] = b;
        }
        let mut cand = Vec::new();
        self.covering.candidates_for_bbox(&cube_lo, &cube_hi, &mut cand);
        let mut samples = vec![Complex64::default(); total];
        let mut idx = vec![0usize; d];
        let mut zeta = vec![0.0; d];
        for (flat, sample) in samples.iter_mut().enumerate() {
            let mut rem = flat;
            for i in (0..d).rev() {
                idx[i] = rem % m;
                rem /= m;
            }
            for i in 0..d {
                zeta[i] = p0[i] - halfside + (idx[i] as f64 + 0.5) * step;
            }
            let xi = patch_map.apply(&zeta);
            let values = self.bump_values_among(&cand, &xi);
            let total_g: f64 = values.iter().map(|(_, g)| g).sum();
            let psi = if total_g <= 0.0 {
                0.0
            } else {
                values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, g)| g / total_g)
            };
            *sample = Complex64::new(psi, 0.0);
        }
        dft_nd(&mut samples, &dims, true);
        // F^{-1}h at lattice x_k has magnitude (2π)^{-d/2} Δ^d |IDFT[k]|; the
        // L₁ quadrature multiplies by the x-cell volume (π/halfside)^d.
        let amp = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) * step.powi(d as i32);
        let xcell = (std::f64::consts::PI / halfside).powi(d as i32);
        Ok(samples.iter().map(|v| amp * v.norm()).sum::<f64>() * xcell)
    }
}
