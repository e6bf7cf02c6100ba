//! Weighted `ℓ_q(L_p)` decomposition norms and their coefficient-space
//! counterparts.
//!
//! The decomposition norm aggregates `h̃(ξ_j)^β ‖φ_j²(D)f‖_{L_p}` over
//! patches in `ℓ_q`. `L_p` norms are computed two ways: `p = 2` goes through
//! Plancherel (frequency-side quadrature), everything else pulls the
//! localized piece back to the reference cube, inverse-FFTs to a spatial
//! lattice (dilation scaling `‖f_j‖_p = |T|^{1−1/p} ‖f‖_p` restores the
//! patch scale), and quadratures there. The coefficient-space norm weights
//! per-patch `ℓ_p` blocks by `h̃(ξ_j)^{β + d/2 − d/p}`; the frame norm uses
//! the `L_p`-normalized atoms `η^p_{n,j} = |T_j|^{1/2−1/p} η_{n,j}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::anorm::QuasiNormContext;
use crate::bapu::Bapu;
use crate::covering::{AffineMap, Covering};
use crate::error::{Error, Result};
use crate::fft::dft_nd;
use crate::frame::{synthesize, CoeffBlock, CoefficientSet, SpectralFunction};
use crate::quad::box_midpoint;

/// Integrability/summability indices and smoothness weight. `∞` is encoded
/// as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceParams {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
}

impl SpaceParams {
    pub fn new(p: f64, q: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 0.0) || (v.is_nan()) {
                return Err(Error::domain(format!("{name} must lie in (0, ∞], got {v}")));
            }
        }
        if !beta.is_finite() {
            return Err(Error::domain("beta must be finite"));
        }
        Ok(Self { p, q, beta })
    }
}

/// `ℓ_p` of a sequence of magnitudes; `sup` at `p = ∞`, raw power sum for
/// `p < 1` (no convexity adjustment).
pub fn lp_sequence<I: IntoIterator<Item = f64>>(values: I, p: f64) -> f64 {
    if p.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else {
        values
            .into_iter()
            .map(|v| v.powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Per-patch result plus the aggregated decomposition norm.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionNorm {
    pub value: f64,
    /// `(j, h̃(ξ_j)^β ‖φ_j²(D)f‖_{L_p})` for every contributing patch.
    pub per_patch: Vec<(usize, f64)>,
    /// Set for `p < 1`: spatial quadrature of non-convex quasi-norms
    /// converges slowly.
    pub reduced_accuracy: bool,
}

/// All three norms side by side, as emitted by the report artifact.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub decomposition_norm: f64,
    pub frame_norm: f64,
    pub coefficient_norm: f64,
    pub ratio: f64,
    pub per_patch_terms: Vec<(usize, f64)>,
    pub reduced_accuracy: bool,
}

const SPATIAL_PAD: usize = 4;
const TAIL_FRACTION: f64 = 1e-6;
const MAX_GRID_DOUBLINGS: usize = 2;

/// `(L_p value, edge fraction)` of the inverse transform of cube samples.
///
/// `samples` is the integrand on an `m^d` corner grid over a box with the
/// given per-axis widths. Zero-padding by `pad` refines the spatial lattice;
/// the spatial extent is `2π/Δ_i` per axis, so callers double `m` (not the
/// padding) when the edge band carries mass.
fn spatial_lp_from_samples(
    samples: &[Complex64],
    m: usize,
    dim: usize,
    widths: &[f64],
    p: f64,
    pad: usize,
) -> (f64, f64) {
    let big = m * pad;
    let dims_big = vec![big; dim];
    let total_big: usize = dims_big.iter().product();
    let mut padded = vec![Complex64::default(); total_big];
    // Embed the m^d block at the origin corner; the induced phase shift does
    // not affect magnitudes.
    let mut idx = vec![0usize; dim];
    for (flat, &v) in samples.iter().enumerate() {
        let mut rem = flat;
        for i in (0..dim).rev() {
            idx[i] = rem % m;
            rem /= m;
        }
        let mut off = 0usize;
        for i in 0..dim {
            off = off * big + idx[i];
        }
        padded[off] = v;
    }
    dft_nd(&mut padded, &dims_big, true);
    let steps: Vec<f64> = widths.iter().map(|w| w / m as f64).collect();
    let amp = (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0)
        * steps.iter().product::<f64>();
    let xcell: f64 = steps.iter().map(|&s| 2.0 * std::f64::consts::PI / (big as f64 * s)).product();
    let edge = |flat: usize| -> bool {
        let mut rem = flat;
        for _ in 0..dim {
            let k = rem % big;
            rem /= big;
            let centered = if k >= big / 2 { big - k } else { k };
            if centered as f64 >= 0.375 * big as f64 {
                return true;
            }
        }
        false
    };
    if p.is_infinite() {
        let mut max_all = 0.0f64;
        let mut max_edge = 0.0f64;
        for (flat, v) in padded.iter().enumerate() {
            let mag = amp * v.norm();
            max_all = max_all.max(mag);
            if edge(flat) {
                max_edge = max_edge.max(mag);
            }
        }
        (max_all, if max_all > 0.0 { max_edge / max_all } else { 0.0 })
    } else {
        let mut sum_all = 0.0;
        let mut sum_edge = 0.0;
        for (flat, v) in padded.iter().enumerate() {
            let mag = (amp * v.norm()).powf(p);
            sum_all += mag;
            if edge(flat) {
                sum_edge += mag;
            }
        }
        let value = (sum_all * xcell).powf(1.0 / p);
        (value, if sum_all > 0.0 { sum_edge / sum_all } else { 0.0 })
    }
}

/// `L_p` norm of `F^{-1}G` for a spectrum `G` supported in the box
/// `[lo, hi]`, by sampling + inverse FFT; `p = 2` short-circuits through
/// Plancherel. The spatial extent doubles (via the sampling grid) until the
/// edge band carries less than `1e-6` of the mass.
pub(crate) fn lp_norm_of_spectrum<F>(
    eval: F,
    lo: &[f64],
    hi: &[f64],
    p: f64,
    grid: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let dim = lo.len();
    if p == 2.0 {
        let counts = vec![grid; dim];
        let v = box_midpoint(|xi| eval(xi).norm_sqr(), lo, hi, &counts);
        return Ok(v.sqrt());
    }
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    if widths.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::domain("spectrum support box is degenerate"));
    }
    let mut m = grid;
    for attempt in 0..=MAX_GRID_DOUBLINGS {
        let total = m.pow(dim as u32);
        let mut samples = vec![Complex64::default(); total];
        let steps: Vec<f64> = widths.iter().map(|w| w / m as f64).collect();
        let rows = m.pow((dim - 1) as u32);
        let chunks: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|first| {
                let mut row = vec![Complex64::default(); rows];
                let mut idx = vec![0usize; dim];
                let mut point = vec![0.0; dim];
                for (flat, slot) in row.iter_mut().enumerate() {
                    idx[0] = first;
                    let mut rem = flat;
                    for i in (1..dim).rev() {
                        idx[i] = rem % m;
                        rem /= m;
                    }
                    for i in 0..dim {
                        point[i] = lo[i] + idx[i] as f64 * steps[i];
                    }
                    *slot = eval(&point);
                }
                row
            })
            .collect();
        for (first, row) in chunks.into_iter().enumerate() {
            samples[first * rows..(first + 1) * rows].copy_from_slice(&row);
        }
        let (value, edge_fraction) =
            spatial_lp_from_samples(&samples, m, dim, &widths, p, SPATIAL_PAD);
        if edge_fraction <= TAIL_FRACTION || attempt == MAX_GRID_DOUBLINGS {
            return Ok(value);
        }
        m *= 2;
    }
    unreachable!("loop always returns")
}

/// `‖φ_j²(D)f‖_{L_p}` for one patch.
fn multiplier_lp_norm(
    b: &Bapu,
    j: usize,
    f: &SpectralFunction,
    p: f64,
    grid: usize,
    halfside: f64,
) -> Result<f64> {
    let cov = b.covering();
    let d = cov.dim();
    if p == 2.0 {
        // Plancherel: dense frequency quadrature of ‖φ_j² f̂‖₂ over Q_j.
        let (lo, hi) = cov.bbox(j);
        let bb = b.clone();
        let counts = vec![grid; d];
        let v = box_midpoint(
            |xi: &[f64]| {
                let phi = bb
                    .phi_values(xi)
                    .iter()
                    .find(|(k, _)| *k == j)
                    .map_or(0.0, |(_, p)| *p);
                (f.eval(xi) * phi * phi).norm_sqr()
            },
            lo,
            hi,
            &counts,
        );
        return Ok(v.sqrt());
    }
    // Reference-cube pullback G(ζ) = φ_j²(T_jζ) f̂(T_jζ); dilation scaling
    // restores the patch: ‖φ_j²(D)f‖_p = |T_j|^{1−1/p} ‖F^{-1}G‖_p.
    let patch = &cov.patches()[j];
    let p0 = cov.p0();
    let mut img_lo = vec![0.0; d];
    let mut img_hi = vec![0.0; d];
    for i in 0..d {
        img_lo[i] = patch.center[i] - patch.map.scales()[i] * halfside;
        img_hi[i] = patch.center[i] + patch.map.scales()[i] * halfside;
    }
    let mut cand = Vec::new();
    cov.candidates_for_bbox(&img_lo, &img_hi, &mut cand);
    let map = patch.map.clone();
    let cube_lo: Vec<f64> = p0.iter().map(|&c| c - halfside).collect();
    let cube_hi: Vec<f64> = p0.iter().map(|&c| c + halfside).collect();
    let bb = b.clone();
    let value = lp_norm_of_spectrum(
        |zeta: &[f64]| {
            let xi = map.apply(zeta);
            let phi = bb.phi_among(j, &cand, &xi);
            if phi == 0.0 {
                Complex64::default()
            } else {
                f.eval(&xi) * phi * phi
            }
        },
        &cube_lo,
        &cube_hi,
        p,
        grid,
    )?;
    Ok(patch.map.det().powf(1.0 - 1.0 / p) * value)
}

/// The decomposition norm `( Σ_j (h̃(ξ_j)^β ‖φ_j²(D)f‖_{L_p})^q )^{1/q}`.
///
/// Requires a band-limited input (support hint) and `grid ≥ 128` per
/// dimension.
pub fn decomposition_norm(
    b: &Bapu,
    f: &SpectralFunction,
    params: &SpaceParams,
    grid: usize,
) -> Result<DecompositionNorm> {
    let cov = b.covering();
    let (s_lo, s_hi) = f
        .support_hint()
        .ok_or_else(|| Error::domain("decomposition_norm requires a support hint"))?;
    if grid < 128 {
        return Err(Error::domain("decomposition_norm needs grid ≥ 128"));
    }
    if f.dim() != cov.dim() {
        return Err(Error::domain("function dimension mismatch"));
    }
    let halfside = match cov.shape() {
        crate::covering::PatchShape::Ball => crate::frame::cube_halfside(cov.ctx()),
        crate::covering::PatchShape::Box => cov.outer_factor(),
    };
    let active: Vec<usize> = (0..cov.len())
        .filter(|&j| {
            let (lo, hi) = cov.shell(j);
            hi >= s_lo && lo <= s_hi
        })
        .collect();
    let per_patch: Vec<(usize, f64)> = active
        .par_iter()
        .map(|&j| -> Result<(usize, f64)> {
            let lp = multiplier_lp_norm(b, j, f, params.p, grid, halfside)?;
            Ok((j, cov.weight(j).powf(params.beta) * lp))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = lp_sequence(per_patch.iter().map(|(_, t)| *t), params.q);
    Ok(DecompositionNorm { value, per_patch, reduced_accuracy: params.p < 1.0 })
}

/// Coefficient-space norm: `ℓ_q` over patches of
/// `h̃(ξ_j)^{β + d/2 − d/p} (Σ_n |c_{n,j}|^p)^{1/p}`.
pub fn coefficient_norm(
    c: &CoefficientSet,
    cov: &Covering,
    params: &SpaceParams,
) -> Result<f64> {
    c.check_covering(cov)?;
    let d = cov.dim() as f64;
    let exponent = params.beta + d / 2.0 - d / params.p;
    let terms: Vec<f64> = c
        .blocks()
        .iter()
        .map(|b| {
            cov.weight(b.patch).powf(exponent)
                * lp_sequence(b.values.iter().map(|v| v.norm()), params.p)
        })
        .collect();
    Ok(lp_sequence(terms, params.q))
}

/// Frame-coefficient norm of the characterization: `ℓ_q` over patches of
/// `h̃(ξ_j)^β (Σ_n |⟨f, η^p_{n,j}⟩|^p)^{1/p}` with
/// `⟨f, η^p_{n,j}⟩ = |T_j|^{1/2−1/p} c_{n,j}`.
pub fn frame_norm(c: &CoefficientSet, cov: &Covering, params: &SpaceParams) -> Result<f64> {
    c.check_covering(cov)?;
    let terms: Vec<f64> = c
        .blocks()
        .iter()
        .map(|b| {
            let det = cov.patches()[b.patch].map.det();
            cov.weight(b.patch).powf(params.beta)
                * det.powf(0.5 - 1.0 / params.p)
                * lp_sequence(b.values.iter().map(|v| v.norm()), params.p)
        })
        .collect();
    Ok(lp_sequence(terms, params.q))
}

/// Coefficient selection rule for [`threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Keep the `n` largest-magnitude coefficients (ties broken by
    /// lexicographic `(j, n)` order).
    Keep(usize),
    /// Keep all coefficients with `|c| ≥ τ`.
    Absolute(f64),
}

/// Zeroes all coefficients not selected by the rule.
pub fn threshold(c: &CoefficientSet, rule: ThresholdRule) -> Result<CoefficientSet> {
    let mut blocks: Vec<CoeffBlock> = c.blocks().to_vec();
    match rule {
        ThresholdRule::Absolute(tau) => {
            if !(tau >= 0.0) {
                return Err(Error::domain("threshold must be nonnegative"));
            }
            for b in &mut blocks {
                for v in &mut b.values {
                    if v.norm() < tau {
                        *v = Complex64::default();
                    }
                }
            }
        }
        ThresholdRule::Keep(keep) => {
            let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(c.count());
            for (bi, b) in blocks.iter().enumerate() {
                for (flat, v) in b.values.iter().enumerate() {
                    order.push((v.norm(), bi, flat));
                }
            }
            order.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .expect("coefficient magnitudes are finite")
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(&b.2))
            });
            for &(_, bi, flat) in order.iter().skip(keep) {
                blocks[bi].values[flat] = Complex64::default();
            }
        }
    }
    Ok(c.with_blocks(blocks))
}

/// Relative `L₂` distance between `f̂` and the synthesis of `c`, by shared
/// midpoint quadrature over the support box (`n_samples` total nodes).
pub fn reconstruct_error(
    f: &SpectralFunction,
    c: &CoefficientSet,
    b: &Bapu,
    n_samples: usize,
) -> Result<f64> {
    let cov = b.covering();
    c.check_covering(cov)?;
    let (_, s_hi) = f
        .support_hint()
        .ok_or_else(|| Error::domain("reconstruct_error requires a support hint"))?;
    f.l2_norm_oracle()
        .ok_or_else(|| Error::domain("reconstruct_error requires an l2 oracle"))?;
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be positive"));
    }
    let d = cov.dim();
    let a = cov.ctx().aniso().exponents();
    let reach: Vec<f64> = a.iter().map(|&ai| s_hi.powf(ai)).collect();
    let per_axis = (n_samples as f64).powf(1.0 / d as f64).ceil() as usize;
    let steps: Vec<f64> = reach.iter().map(|r| 2.0 * r / per_axis as f64).collect();
    let rows: Vec<(f64, f64)> = (0..per_axis)
        .into_par_iter()
        .map(|i0| -> (f64, f64) {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut point = vec![0.0; d];
            point[0] = -reach[0] + (i0 as f64 + 0.5) * steps[0];
            let inner = per_axis.pow((d - 1) as u32);
            for flat in 0..inner {
                let mut rem = flat;
                for i in (1..d).rev() {
                    point[i] = -reach[i]
                        + ((rem % per_axis) as f64 + 0.5) * steps[i];
                    rem /= per_axis;
                }
                let fv = f.eval(&point);
                let sv = synthesize(c, b, &point).expect("covering already checked");
                num += (fv - sv).norm_sqr();
                den += fv.norm_sqr();
            }
            (num, den)
        })
        .collect();
    let num: f64 = rows.iter().map(|r| r.0).sum();
    let den: f64 = rows.iter().map(|r| r.1).sum();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

const QUAD_RELIABLE: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Ratio `‖f_j‖_{L_p} / (|T|^{1−1/p} ‖f‖_{L_p})` for `f̂_j = f̂ ∘ T^{-1}`;
/// equals 1 by the dilation substitution. `p ∈ {1, 2, ∞}`.
pub fn dilation_scaling_check(
    ctx: &QuasiNormContext,
    map: &AffineMap,
    f: &SpectralFunction,
    p: f64,
    grid: usize,
) -> Result<f64> {
    if !QUAD_RELIABLE.contains(&p) {
        return Err(Error::domain("dilation check supports p ∈ {1, 2, ∞}"));
    }
    let (lo, hi) = support_box(ctx, f)?;
    let base = lp_norm_of_spectrum(|xi| f.eval(xi), &lo, &hi, p, grid)?;
    let t_lo = map.apply(&lo);
    let t_hi = map.apply(&hi);
    let mapped = lp_norm_of_spectrum(
        |xi| f.eval(&map.apply_inv(xi)),
        &t_lo,
        &t_hi,
        p,
        grid,
    )?;
    Ok(mapped / (map.det().powf(1.0 - 1.0 / p) * base))
}

/// Ratio `‖f_j‖_{L_q} / (|T|^{1/p−1/q} ‖f_j‖_{L_p})` for `p ≤ q` — the
/// quantity bounded by the Nikolskii inequality, uniform over patches.
pub fn nikolskii_check(
    ctx: &QuasiNormContext,
    map: &AffineMap,
    f: &SpectralFunction,
    p: f64,
    q: f64,
    grid: usize,
) -> Result<f64> {
    if p > q {
        return Err(Error::domain("nikolskii_check requires p ≤ q"));
    }
    if !QUAD_RELIABLE.contains(&p) || !QUAD_RELIABLE.contains(&q) {
        return Err(Error::domain("nikolskii check supports p, q ∈ {1, 2, ∞}"));
    }
    let (lo, hi) = support_box(ctx, f)?;
    let t_lo = map.apply(&lo);
    let t_hi = map.apply(&hi);
    let eval = |xi: &[f64]| f.eval(&map.apply_inv(xi));
    let num = lp_norm_of_spectrum(&eval, &t_lo, &t_hi, q, grid)?;
    let den = lp_norm_of_spectrum(&eval, &t_lo, &t_hi, p, grid)?;
    Ok(num / (map.det().powf(1.0 / p - 1.0 / q) * den))
}

/// Coordinate bounding box of an annular support: `|ξ|_a ≤ s_hi` forces
/// `|ξ_i| ≤ s_hi^{a_i}`.
fn support_box(ctx: &QuasiNormContext, f: &SpectralFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, s_hi) = f
        .support_hint()
        .ok_or_else(|| Error::domain("norm checks require compactly supported spectra"))?;
    let reach: Vec<f64> = ctx
        .aniso()
        .exponents()
        .iter()
        .map(|&ai| s_hi.powf(ai))
        .collect();
    let lo: Vec<f64> = reach.iter().map(|r| -r).collect();
    Ok((lo, reach))
}

/// Aggregates all three norms for the report artifact.
pub fn norm_report(
    b: &Bapu,
    f: &SpectralFunction,
    coeffs: &CoefficientSet,
    params: &SpaceParams,
    grid: usize,
) -> Result<NormReport> {
    let cov = b.covering();
    let dec = decomposition_norm(b, f, params, grid)?;
    let fr = frame_norm(coeffs, cov, params)?;
    let co = coefficient_norm(coeffs, cov, params)?;
    Ok(NormReport {
        decomposition_norm: dec.value,
        frame_norm: fr,
        coefficient_norm: co,
        ratio: if fr > 0.0 { dec.value / fr } else { f64::INFINITY },
        per_patch_terms: dec.per_patch,
        reduced_accuracy: dec.reduced_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anorm::Anisotropy;
    use crate::bapu::Bapu;
    use crate::covering::build_covering;
    use crate::frame::{analyze, FrameGeometry};
    use crate::regulation::{alpha_regulation, smoothstep};
    use std::sync::Arc;

    fn ctx_with_k(a: Vec<f64>) -> QuasiNormContext {
        let mut c = QuasiNormContext::with_default_tol(Anisotropy::new(a).unwrap());
        c.estimate_k(20_000, 1).unwrap();
        c
    }

    fn d1_bapu() -> Bapu {
        let c = ctx_with_k(vec![1.0]);
        let h = alpha_regulation(&c, 0.5).unwrap();
        let cov = build_covering(&h, 0.25, 0.35, (2f64.powi(-6), 2f64.powi(6)), 32).unwrap();
        Bapu::new(Arc::new(cov), 3).unwrap()
    }

    fn annular_bump(ctx: &QuasiNormContext, center: f64, width: f64) -> SpectralFunction {
        let c = ctx.clone();
        let d = ctx.dim();
        let eval = move |xi: &[f64]| {
            let t = c.aniso_norm(xi).unwrap_or(f64::NAN);
            let u = ((t - center) / width).abs();
            let v = if u >= 1.0 {
                0.0
            } else if u <= 0.5 {
                1.0
            } else {
                1.0 - smoothstep(4, (u - 0.5) * 2.0)
            };
            Complex64::new(v, 0.0)
        };
        let f = SpectralFunction::new(d, Arc::new(eval))
            .with_support_hint(ctx, center - width, center + width)
            .unwrap();
        // Independent oracle for the retract checks.
        let ff = f.clone();
        let reach = (center + width).max(1.0);
        let norm2 = box_midpoint(
            move |xi: &[f64]| ff.eval(xi).norm_sqr(),
            &[-reach],
            &[reach],
            &[120_000],
        );
        f.with_l2_oracle(norm2.sqrt()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SpaceParams::new(2.0, 2.0, 0.0).is_ok());
        assert!(SpaceParams::new(f64::INFINITY, 1.0, -1.0).is_ok());
        assert!(SpaceParams::new(0.0, 1.0, 0.0).is_err());
        assert!(SpaceParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn lp_sequence_cases() {
        let v = [3.0, 4.0];
        assert_eq!(lp_sequence(v, 2.0), 5.0);
        assert_eq!(lp_sequence(v, f64::INFINITY), 4.0);
        assert_eq!(lp_sequence(v, 1.0), 7.0);
    }

    #[test]
    fn zero_function_everywhere() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let zero = SpectralFunction::new(1, Arc::new(|_: &[f64]| Complex64::default()))
            .with_support_hint(&ctx, 3.0, 5.0)
            .unwrap();
        let params = SpaceParams::new(2.0, 2.0, 0.0).unwrap();
        let dn = decomposition_norm(&b, &zero, &params, 128).unwrap();
        assert_eq!(dn.value, 0.0);
        let g = FrameGeometry::for_covering(b.covering(), 8, 32).unwrap();
        let c = analyze(&b, &g, &zero).unwrap();
        assert_eq!(coefficient_norm(&c, b.covering(), &params).unwrap(), 0.0);
        assert_eq!(frame_norm(&c, b.covering(), &params).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_energy_bracketed_by_overlap() {
        // Σ_j ‖φ_j² f̂‖₂² ≤ ‖f̂‖₂² ≤ N · Σ_j ‖φ_j² f̂‖₂² (since Σφ² = 1 and
        // each φ_j² ≤ 1 on the covered annulus).
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let params = SpaceParams::new(2.0, 2.0, 0.0).unwrap();
        let dn = decomposition_norm(&b, &f, &params, 512).unwrap();
        let total2 = f.l2_norm_oracle().unwrap().powi(2);
        let sum2: f64 = dn.per_patch.iter().map(|(_, t)| t * t).sum();
        let n_overlap = b.covering().max_neighbor_count() as f64;
        assert!(sum2 <= total2 * (1.0 + 1e-6), "{sum2} vs {total2}");
        assert!(sum2 * n_overlap >= total2, "{sum2}·{n_overlap} vs {total2}");
    }

    #[test]
    fn dilation_shifts_dominant_patch_inward() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let params = SpaceParams::new(2.0, 2.0, 0.0).unwrap();
        let argmax = |dn: &DecompositionNorm| -> usize {
            dn.per_patch
                .iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap()
                .0
        };
        let base = decomposition_norm(&b, &f, &params, 256).unwrap();
        let dilated = f.dilated(&ctx, 2.0).unwrap();
        let shifted = decomposition_norm(&b, &dilated, &params, 256).unwrap();
        let cov = b.covering();
        assert!(
            cov.center_norm(argmax(&shifted)) < cov.center_norm(argmax(&base)),
            "dominant patch should move toward lower |ξ|_a"
        );
    }

    #[test]
    fn coefficient_norm_degeneracies() {
        let b = d1_bapu();
        let cov = b.covering().clone();
        let g = FrameGeometry::for_covering(&cov, 4, 16).unwrap();
        let zero = SpectralFunction::new(1, Arc::new(|_: &[f64]| Complex64::default()));
        let mut c = analyze(&b, &g, &zero).unwrap();
        // One unit coefficient at (0, j): weight exponent β + d/2 − d/p
        // vanishes at p = 2, β = 0, so the norm is exactly 1.
        let j = cov.len() / 2;
        let bi = c
            .blocks()
            .iter()
            .position(|bl| bl.patch == j)
            .expect("full analysis stores every patch");
        let off = crate::fft::signed_index_offset(&[0], 4);
        let mut blocks = c.blocks().to_vec();
        blocks[bi].values[off] = Complex64::new(1.0, 0.0);
        c = c.with_blocks(blocks);
        let params = SpaceParams::new(2.0, 2.0, 0.0).unwrap();
        assert!((coefficient_norm(&c, &cov, &params).unwrap() - 1.0).abs() < 1e-12);
        // Scaling homogeneity for p, q ≥ 1.
        let mut scaled_blocks = c.blocks().to_vec();
        for bl in &mut scaled_blocks {
            for v in &mut bl.values {
                *v *= 3.0;
            }
        }
        let c3 = c.with_blocks(scaled_blocks);
        let params = SpaceParams::new(1.0, 2.0, 0.5).unwrap();
        let n1 = coefficient_norm(&c, &cov, &params).unwrap();
        let n3 = coefficient_norm(&c3, &cov, &params).unwrap();
        assert!((n3 - 3.0 * n1).abs() < 1e-12 * n3.max(1.0));
    }

    #[test]
    fn frame_norm_equals_coefficient_norm_at_p2() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let cov = b.covering().clone();
        let g = FrameGeometry::for_covering(&cov, 16, 64).unwrap();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let c = analyze(&b, &g, &f).unwrap();
        for beta in [-1.0, 0.0, 1.0] {
            let params = SpaceParams::new(2.0, 2.0, beta).unwrap();
            let fr = frame_norm(&c, &cov, &params).unwrap();
            let co = coefficient_norm(&c, &cov, &params).unwrap();
            assert!(
                (fr - co).abs() <= 1e-12 * fr.max(1e-300),
                "p=2 degeneracy: {fr} vs {co}"
            );
        }
        // Weight consistency: |T_j| = (cover radius)^d exactly for balls.
        for p in cov.patches() {
            let expected = p.radius.powi(cov.dim() as i32);
            assert!((p.map.det() - expected).abs() <= 1e-9 * expected);
        }
    }

    #[test]
    fn equivalence_ratio_stable_over_dilated_family() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let cov = b.covering().clone();
        let g = FrameGeometry::for_covering(&cov, 16, 64).unwrap();
        let base = annular_bump(&ctx, 4.0, 0.8);
        let params = SpaceParams::new(2.0, 2.0, 0.0).unwrap();
        let mut ratios = Vec::new();
        for m in -2..=2 {
            let f = base.dilated(&ctx, 2f64.powi(m)).unwrap();
            let c = analyze(&b, &g, &f).unwrap();
            let rep = norm_report(&b, &f, &c, &params, 256).unwrap();
            assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
            ratios.push(rep.ratio);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 4.0, "ratios {ratios:?}");
        assert!(max < 50.0);
    }

    #[test]
    fn threshold_basics() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let g = FrameGeometry::for_covering(b.covering(), 8, 32).unwrap();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let c = analyze(&b, &g, &f).unwrap();
        let total = c.count();
        let all = threshold(&c, ThresholdRule::Keep(total)).unwrap();
        assert_eq!(all.total_energy(), c.total_energy());
        let none = threshold(&c, ThresholdRule::Keep(0)).unwrap();
        assert_eq!(none.total_energy(), 0.0);
        assert!(threshold(&c, ThresholdRule::Absolute(-1.0)).is_err());
        // Keeping more never loses energy.
        let mut last = 0.0;
        for keep in [8, 64, 256, total] {
            let t = threshold(&c, ThresholdRule::Keep(keep)).unwrap();
            let e = t.total_energy();
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn top_coefficient_of_an_atom_halves_the_error_energy() {
        // Analyze a frame atom and keep only the top coefficient: threshold
        // retains the dominant (n = 0, j₀) entry, and the one-term
        // reconstruction already removes half of the error energy:
        // ‖f − c η̂‖²/‖f‖² = (1 − ‖η̂‖²)² < 1/2. The bound needs ‖η̂‖² > 0.3,
        // which holds on sparsely overlapping coverings (near a tile core
        // φ ≈ 1); dense ball coverings dilute the atom across neighbors.
        let c = ctx_with_k(vec![1.0]);
        let cov_box = crate::covering::besov_covering(&c, -6, 7).unwrap();
        let b = Bapu::new(Arc::new(cov_box), 3).unwrap();
        let cov = b.covering().clone();
        let g = FrameGeometry::for_covering(&cov, 16, 64).unwrap();
        let j0 = (0..cov.len())
            .min_by(|&i, &j| {
                let di = (cov.center_norm(i).ln() - 4f64.ln()).abs();
                let dj = (cov.center_norm(j).ln() - 4f64.ln()).abs();
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap();
        let bb = b.clone();
        let eval = move |xi: &[f64]| {
            crate::frame::eta_hat_eval(&bb, &g, j0, &[0], xi).unwrap()
        };
        let (s_lo, s_hi) = cov.shell(j0);
        let f = SpectralFunction::new(1, Arc::new(eval))
            .with_support_hint(b.ctx(), s_lo, s_hi)
            .unwrap();
        let ff = f.clone();
        let reach = cov.bbox(j0).1[0].abs().max(cov.bbox(j0).0[0].abs()) * 1.5;
        let norm2 = box_midpoint(
            move |xi: &[f64]| ff.eval(xi).norm_sqr(),
            &[-reach],
            &[reach],
            &[200_000],
        );
        let f = f.with_l2_oracle(norm2.sqrt()).unwrap();
        let c = analyze(&b, &g, &f).unwrap();
        let top = threshold(&c, ThresholdRule::Keep(1)).unwrap();
        // The kept entry is the self-coefficient (n = 0, j₀).
        let block = top.block_for(j0).expect("dominant entry lives on j0");
        let off0 = crate::fft::signed_index_offset(&[0], g.n_c as i64);
        assert!(block.values[off0].norm() > 0.0);
        assert_eq!(
            top.blocks()
                .iter()
                .map(|b| b.values.iter().filter(|v| v.norm() > 0.0).count())
                .sum::<usize>(),
            1
        );
        let err = reconstruct_error(&f, &top, &b, 4000).unwrap();
        assert!(err * err < 0.5, "one-term error energy {} ≥ 1/2", err * err);
    }

    #[test]
    fn reconstruction_error_behaviour() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let g = FrameGeometry::for_covering(b.covering(), 32, 128).unwrap();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let c = analyze(&b, &g, &f).unwrap();
        let full = reconstruct_error(&f, &c, &b, 4000).unwrap();
        assert!(full <= 1e-4, "full reconstruction error {full}");
        // Thresholded errors decrease monotonically in kept count.
        let total = c.count();
        let mut last = f64::INFINITY;
        for frac in [0.01, 0.05, 0.1, 0.5, 1.0] {
            let keep = ((total as f64) * frac).round() as usize;
            let t = threshold(&c, ThresholdRule::Keep(keep)).unwrap();
            let err = reconstruct_error(&f, &t, &b, 4000).unwrap();
            assert!(
                err <= last + 1e-12,
                "error must not grow with kept coefficients: {err} after {last}"
            );
            last = err;
        }
        // 10% keep sits strictly between zero and everything for this input.
        let ten = threshold(&c, ThresholdRule::Keep(total / 10)).unwrap();
        let err10 = reconstruct_error(&f, &ten, &b, 4000).unwrap();
        assert!(err10 > full && err10 < 1.0);
        // All-zero coefficients reproduce nothing.
        let none = threshold(&c, ThresholdRule::Keep(0)).unwrap();
        let err0 = reconstruct_error(&f, &none, &b, 4000).unwrap();
        assert!((err0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_homogeneity_of_decomposition_norm() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let f = annular_bump(&ctx, 4.0, 0.8);
        let params = SpaceParams::new(2.0, 1.0, 0.5).unwrap();
        let n1 = decomposition_norm(&b, &f, &params, 128).unwrap().value;
        let n3 = decomposition_norm(
            &b,
            &f.scaled(Complex64::new(0.0, 3.0)),
            &params,
            128,
        )
        .unwrap()
        .value;
        assert!((n3 - 3.0 * n1).abs() <= 1e-9 * n3);
    }

    #[test]
    fn quasi_norm_constant_recorded_for_small_indices() {
        // p, q < 1: the aggregation is a raw power sum; record the empirical
        // quasi-triangle constant of the resulting functional.
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let params = SpaceParams::new(0.5, 0.5, 0.0).unwrap();
        let f1 = annular_bump(&ctx, 3.5, 0.4);
        let f2 = annular_bump(&ctx, 7.0, 0.4);
        let ff1 = f1.clone();
        let ff2 = f2.clone();
        let sum = SpectralFunction::new(1, Arc::new(move |xi: &[f64]| ff1.eval(xi) + ff2.eval(xi)))
            .with_support_hint(&ctx, 3.1, 7.4)
            .unwrap();
        let n1 = decomposition_norm(&b, &f1, &params, 128).unwrap();
        let n2 = decomposition_norm(&b, &f2, &params, 128).unwrap();
        let ns = decomposition_norm(&b, &sum, &params, 128).unwrap();
        assert!(ns.reduced_accuracy);
        let k_emp = ns.value / (n1.value + n2.value);
        assert!(k_emp.is_finite() && k_emp > 0.0);
    }

    #[test]
    fn dilation_scaling_identity_and_maps() {
        let ctx = ctx_with_k(vec![1.0]);
        let f = annular_bump(&ctx, 4.0, 0.8);
        let id = AffineMap::new(vec![1.0], vec![0.0]).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let r = dilation_scaling_check(&ctx, &id, &f, p, 512).unwrap();
            assert_eq!(r, 1.0, "identity map must give exactly 1 at p = {p}");
        }
        let d2 = AffineMap::new(ctx.dilation(2.0).unwrap(), vec![0.0]).unwrap();
        for (p, tol) in [(1.0, 1e-4), (2.0, 1e-6), (f64::INFINITY, 1e-4)] {
            let r = dilation_scaling_check(&ctx, &d2, &f, p, 512).unwrap();
            assert!((r - 1.0).abs() <= tol, "p = {p}: ratio {r}");
        }
        assert!(dilation_scaling_check(&ctx, &d2, &f, 3.0, 512).is_err());
        let no_hint = SpectralFunction::new(1, Arc::new(|_: &[f64]| Complex64::default()));
        assert!(dilation_scaling_check(&ctx, &d2, &no_hint, 2.0, 512).is_err());
    }

    #[test]
    fn nikolskii_ratios_uniform_over_patch_sweep() {
        let b = d1_bapu();
        let ctx = b.ctx().clone();
        let cov = b.covering().clone();
        let f = annular_bump(&ctx, 4.0, 0.8);
        // p = q: the exponent is 0 and the same norm appears twice.
        let id = AffineMap::new(vec![1.0], vec![0.0]).unwrap();
        let r = nikolskii_check(&ctx, &id, &f, 2.0, 2.0, 256).unwrap();
        assert_eq!(r, 1.0);
        assert!(nikolskii_check(&ctx, &id, &f, 2.0, 1.0, 256).is_err());
        // Sweep 10 patch maps of varying |T|.
        for (p, q) in [(1.0, 2.0), (2.0, f64::INFINITY)] {
            let mut ratios = Vec::new();
            for j in (0..cov.len()).step_by((cov.len() / 10).max(1)).take(10) {
                let map = cov.patches()[j].map.clone();
                ratios.push(nikolskii_check(&ctx, &map, &f, p, q, 256).unwrap());
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                max <= 2.0 * min,
                "nikolskii ratios spread beyond factor 2 at ({p}, {q}): [{min}, {max}]"
            );
        }
    }
}
