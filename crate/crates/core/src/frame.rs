//! Tight frame adapted to a covering: `η̂_{n,j} = φ_j · e_{n,j}`, where the
//! `e_{n,j}` are the orthonormal exponentials of the cube `T_j(K_a)`.
//!
//! With `K_a` the axis-aligned cube of half-side `a` around `p₀` containing
//! the reference support set,
//!
//! ```text
//! e_{n,j}(ξ) = (2a)^{-d/2} |T_j|^{-1/2} χ_{K_a}(T_j^{-1}ξ) e^{i(π/a) n · T_j^{-1}ξ}
//! ```
//!
//! Analysis coefficients are `c_{n,j} = ⟨f̂, η̂_{n,j}⟩`; pulling the integral
//! back to the reference cube turns each patch into a single FFT of
//! `F_j(ζ) = φ_j(T_jζ) f̂(T_jζ)`. The integrand is smooth and supported
//! strictly inside `K_a`, so the trapezoidal/FFT quadrature converges at
//! high order, and the oversampling bound `M ≥ 4 N_c` keeps aliasing below
//! the coefficient tail.

use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anorm::{log_uniform, sample_direction, QuasiNormContext};
use crate::bapu::Bapu;
use crate::covering::{Covering, PatchShape};
use crate::error::{Error, Result};
use crate::fft::{dft_nd, signed_index_offset, signed_indices};

/// A frequency-domain function: an evaluator plus optional support and
/// `L₂`-norm metadata.
#[derive(Clone)]
pub struct SpectralFunction {
    eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
    dim: usize,
    support_hint: Option<(f64, f64)>,
    l2_norm_oracle: Option<f64>,
}

impl std::fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("dim", &self.dim)
            .field("support_hint", &self.support_hint)
            .field("l2_norm_oracle", &self.l2_norm_oracle)
            .finish()
    }
}

impl SpectralFunction {
    pub fn new(dim: usize, eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>) -> Self {
        Self { eval, dim, support_hint: None, l2_norm_oracle: None }
    }

    /// Declares an annular support `{s_lo ≤ |ξ|_a ≤ s_hi}` and spot-checks it
    /// on 100 seeded exterior points.
    pub fn with_support_hint(
        self,
        ctx: &QuasiNormContext,
        s_lo: f64,
        s_hi: f64,
    ) -> Result<Self> {
        if !(s_lo > 0.0 && s_hi > s_lo) {
            return Err(Error::domain("support hint must satisfy 0 < s_lo < s_hi"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5490);
        for i in 0..100 {
            let t = if i % 2 == 0 {
                log_uniform(&mut rng, s_hi * 1.0001, s_hi * 100.0)
            } else {
                log_uniform(&mut rng, s_lo * 1e-2, s_lo * 0.9999)
            };
            let u = sample_direction(&mut rng, self.dim);
            let xi = ctx.point_with_norm(t, &u);
            if (self.eval)(&xi).norm() != 0.0 {
                return Err(Error::domain(format!(
                    "support hint violated: evaluator is nonzero at |ξ|_a = {t}"
                )));
            }
        }
        Ok(self.with_support_hint_unchecked((s_lo, s_hi)))
    }

    pub(crate) fn with_support_hint_unchecked(mut self, hint: (f64, f64)) -> Self {
        self.support_hint = Some(hint);
        self
    }

    pub fn with_l2_oracle(mut self, norm: f64) -> Result<Self> {
        if !(norm >= 0.0) || !norm.is_finite() {
            return Err(Error::domain("l2 oracle must be a finite nonnegative norm"));
        }
        self.l2_norm_oracle = Some(norm);
        Ok(self)
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.eval)(xi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_hint(&self) -> Option<(f64, f64)> {
        self.support_hint
    }

    pub fn l2_norm_oracle(&self) -> Option<f64> {
        self.l2_norm_oracle
    }

    /// Scalar multiple, preserving metadata.
    pub fn scaled(&self, lambda: Complex64) -> Self {
        let inner = self.eval.clone();
        Self {
            eval: Arc::new(move |xi| inner(xi) * lambda),
            dim: self.dim,
            support_hint: self.support_hint,
            l2_norm_oracle: self.l2_norm_oracle.map(|n| n * lambda.norm()),
        }
    }

    /// The dilated spectrum `ξ ↦ f̂(D_a(t) ξ)`: support shrinks by `t` in
    /// `|·|_a`, and `‖f̂ ∘ D_a(t)‖₂ = t^{-d/2} ‖f̂‖₂` (since `Σ a_i = d`).
    pub fn dilated(&self, ctx: &QuasiNormContext, t: f64) -> Result<Self> {
        if self.dim != ctx.dim() {
            return Err(Error::domain("dilation context dimension mismatch"));
        }
        let scales = ctx.dilation(t)?;
        let inner = self.eval.clone();
        let eval = move |xi: &[f64]| {
            let scaled: Vec<f64> = xi.iter().zip(&scales).map(|(x, s)| x * s).collect();
            inner(&scaled)
        };
        let d = self.dim as f64;
        Ok(Self {
            eval: Arc::new(eval),
            dim: self.dim,
            support_hint: self.support_hint.map(|(lo, hi)| (lo / t, hi / t)),
            l2_norm_oracle: self.l2_norm_oracle.map(|n| n * t.powf(-d / 2.0)),
        })
    }
}

/// Cube half-side, coefficient truncation, and quadrature grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub halfside: f64,
    pub n_c: usize,
    pub m: usize,
}

/// Tight axis-aligned half-side for a ball reference set: `|ζ − p₀|_a ≤ 2`
/// forces `|ζ_i − p₀_i| ≤ 2^{a_i}`, so `a = max_i 2^{a_i}`.
pub fn cube_halfside(ctx: &QuasiNormContext) -> f64 {
    ctx.aniso()
        .exponents()
        .iter()
        .map(|&ai| 2f64.powf(ai))
        .fold(0.0, f64::max)
}

impl FrameGeometry {
    pub fn new(halfside: f64, n_c: usize, m: usize) -> Result<Self> {
        if !(halfside > 0.0) {
            return Err(Error::domain("cube half-side must be positive"));
        }
        if n_c == 0 {
            return Err(Error::domain("coefficient truncation must be at least 1"));
        }
        if m < 4 * n_c {
            return Err(Error::domain(format!(
                "oversampling requires M ≥ 4·N_c, got M = {m}, N_c = {n_c}"
            )));
        }
        Ok(Self { halfside, n_c, m })
    }

    /// Geometry with the tight half-side for the covering's reference set.
    pub fn for_covering(c: &Covering, n_c: usize, m: usize) -> Result<Self> {
        let halfside = match c.shape() {
            PatchShape::Ball => cube_halfside(c.ctx()),
            PatchShape::Box => c.outer_factor(),
        };
        Self::new(halfside, n_c, m)
    }

    /// Stored coefficients per patch: `(2 N_c + 1)^d`.
    pub fn block_len(&self, dim: usize) -> usize {
        (2 * self.n_c + 1).pow(dim as u32)
    }
}

/// Dense coefficient block of one patch: row-major over `n ∈ [−N_c, N_c]^d`.
#[derive(Debug, Clone)]
pub struct CoeffBlock {
    pub patch: usize,
    pub values: Vec<Complex64>,
}

/// Frame coefficients `(j, n) ↦ c_{n,j}` with the geometry and the identity
/// of the covering they came from.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    covering_id: String,
    dim: usize,
    geometry: FrameGeometry,
    blocks: Vec<CoeffBlock>,
    skipped: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientSetRepr {
    covering_id: String,
    a: f64,
    n_c: usize,
    m: usize,
    dim: usize,
    skipped: Vec<usize>,
    /// Entries `(j, n, re, im)`.
    entries: Vec<(usize, Vec<i64>, f64, f64)>,
}

impl CoefficientSet {
    pub fn covering_id(&self) -> &str {
        &self.covering_id
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[CoeffBlock] {
        &self.blocks
    }

    /// Patches skipped by analysis because the support hint excluded them.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    /// Number of stored coefficients.
    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    /// `Σ_{j,n} |c_{n,j}|²`, accumulated in fixed patch order.
    pub fn total_energy(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Per-patch energies `(j, Σ_n |c_{n,j}|²)`.
    pub fn patch_energies(&self) -> Vec<(usize, f64)> {
        self.blocks
            .iter()
            .map(|b| (b.patch, b.values.iter().map(|v| v.norm_sqr()).sum::<f64>()))
            .collect()
    }

    pub fn block_for(&self, patch: usize) -> Option<&CoeffBlock> {
        self.blocks
            .binary_search_by_key(&patch, |b| b.patch)
            .ok()
            .map(|i| &self.blocks[i])
    }

    /// Rebuilds with the same identity but new blocks (used by thresholding).
    pub(crate) fn with_blocks(&self, blocks: Vec<CoeffBlock>) -> Self {
        Self {
            covering_id: self.covering_id.clone(),
            dim: self.dim,
            geometry: self.geometry,
            blocks,
            skipped: self.skipped.clone(),
        }
    }

    pub(crate) fn check_covering(&self, c: &Covering) -> Result<()> {
        if self.covering_id != c.id() {
            return Err(Error::CoveringMismatch {
                expected: self.covering_id.clone(),
                found: c.id().to_string(),
            });
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let n_c = self.geometry.n_c as i64;
        let mut entries = Vec::with_capacity(self.count());
        for b in &self.blocks {
            for (flat, n) in signed_indices(self.dim, n_c).enumerate() {
                let v = b.values[flat];
                entries.push((b.patch, n, v.re, v.im));
            }
        }
        let repr = CoefficientSetRepr {
            covering_id: self.covering_id.clone(),
            a: self.geometry.halfside,
            n_c: self.geometry.n_c,
            m: self.geometry.m,
            dim: self.dim,
            skipped: self.skipped.clone(),
            entries,
        };
        Ok(serde_json::to_string(&repr)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let repr: CoefficientSetRepr = serde_json::from_str(json)?;
        let geometry = FrameGeometry::new(repr.a, repr.n_c, repr.m)?;
        let block_len = geometry.block_len(repr.dim);
        let n_c = repr.n_c as i64;
        let mut blocks: Vec<CoeffBlock> = Vec::new();
        for (patch, n, re, im) in repr.entries {
            if n.len() != repr.dim || n.iter().any(|&ni| ni.abs() > n_c) {
                return Err(Error::domain("coefficient multi-index out of range"));
            }
            let need_new = blocks.last().map(|b| b.patch != patch).unwrap_or(true);
            if need_new {
                if blocks.last().map(|b| b.patch > patch).unwrap_or(false) {
                    return Err(Error::domain("entries must be sorted by patch"));
                }
                blocks.push(CoeffBlock {
                    patch,
                    values: vec![Complex64::default(); block_len],
                });
            }
            let off = signed_index_offset(&n, n_c);
            blocks.last_mut().expect("just pushed").values[off] = Complex64::new(re, im);
        }
        Ok(Self {
            covering_id: repr.covering_id,
            dim: repr.dim,
            geometry,
            blocks,
            skipped: repr.skipped,
        })
    }
}

/// `η̂_{n,j}(ξ)`.
pub fn eta_hat_eval(
    b: &Bapu,
    g: &FrameGeometry,
    j: usize,
    n: &[i64],
    xi: &[f64],
) -> Result<Complex64> {
    let cov = b.covering();
    let patch = cov.patch(j)?;
    let d = cov.dim();
    if n.len() != d || xi.len() != d {
        return Err(Error::domain("multi-index and point must match the dimension"));
    }
    let v = cov.reference_coords(j, xi);
    for i in 0..d {
        if (v[i] - cov.p0()[i]).abs() > g.halfside {
            return Ok(Complex64::default());
        }
    }
    let phi = {
        let values = b.phi_values(xi);
        values.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, p)| *p)
    };
    if phi == 0.0 {
        return Ok(Complex64::default());
    }
    let det = patch.map.det();
    let amp = (2.0 * g.halfside).powf(-(d as f64) / 2.0) / det.sqrt();
    let mut phase = 0.0;
    for i in 0..d {
        phase += std::f64::consts::PI / g.halfside * n[i] as f64 * v[i];
    }
    Ok(Complex64::from_polar(amp * phi, phase))
}

/// Per-patch FFT analysis: `c_{n,j} = ⟨f̂, η̂_{n,j}⟩` for `|n_i| ≤ N_c`.
///
/// Patches whose support shell misses the function's support hint are
/// recorded in the skip list with no coefficients.
pub fn analyze(b: &Bapu, g: &FrameGeometry, f: &SpectralFunction) -> Result<CoefficientSet> {
    let cov = b.covering();
    let d = cov.dim();
    if f.dim() != d {
        return Err(Error::domain("function dimension does not match the covering"));
    }
    let m = g.m;
    let dims = vec![m; d];
    let total: usize = dims.iter().product();
    let halfside = g.halfside;
    let p0 = cov.p0().to_vec();
    let step = 2.0 * halfside / m as f64;
    let n_c = g.n_c as i64;
    let hint = f.support_hint();

    enum PatchOutcome {
        Skipped(usize),
        Block(CoeffBlock),
    }
    let outcomes: Vec<PatchOutcome> = (0..cov.len())
        .into_par_iter()
        .map(|j| {
            if let Some((s_lo, s_hi)) = hint {
                let (shell_lo, shell_hi) = cov.shell(j);
                if shell_hi < s_lo || shell_lo > s_hi {
                    return PatchOutcome::Skipped(j);
                }
            }
            let patch_map = cov.patches()[j].map.clone();
            // Candidates for every grid point: supports intersecting the
            // image of the cube.
            let center = &cov.patches()[j].center;
            let mut cube_lo = vec![0.0; d];
            let mut cube_hi = vec![0.0; d];
            for i in 0..d {
                cube_lo[i] = center[i] - patch_map.scales()[i] * halfside;
                cube_hi[i] = center[i] + patch_map.scales()[i] * halfside;
            }
            let mut cand = Vec::new();
            cov.candidates_for_bbox(&cube_lo, &cube_hi, &mut cand);

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
                    zeta[i] = p0[i] - halfside + idx[i] as f64 * step;
                }
                let xi = patch_map.apply(&zeta);
                let phi = b.phi_among(j, &cand, &xi);
                if phi != 0.0 {
                    *sample = f.eval(&xi) * phi;
                }
            }
            dft_nd(&mut samples, &dims, false);
            // c_{n,j} = |T_j|^{1/2} (2a)^{d/2} / M^d · e^{-i(π/a) n·lo} · X[n mod M]
            let det = patch_map.det();
            let amp = det.sqrt() * (2.0 * halfside).powf(d as f64 / 2.0) / total as f64;
            let mut values = Vec::with_capacity(g.block_len(d));
            for n in signed_indices(d, n_c) {
                let mut wrapped = 0usize;
                let mut phase = 0.0;
                for i in 0..d {
                    let ni = n[i];
                    let k = ((ni % m as i64) + m as i64) % m as i64;
                    wrapped = wrapped * m + k as usize;
                    phase -= std::f64::consts::PI / halfside
                        * ni as f64
                        * (p0[i] - halfside);
                }
                values.push(samples[wrapped] * Complex64::from_polar(amp, phase));
            }
            PatchOutcome::Block(CoeffBlock { patch: j, values })
        })
        .collect();

    let mut blocks = Vec::new();
    let mut skipped = Vec::new();
    for oc in outcomes {
        match oc {
            PatchOutcome::Skipped(j) => skipped.push(j),
            PatchOutcome::Block(b) => blocks.push(b),
        }
    }
    Ok(CoefficientSet {
        covering_id: cov.id().to_string(),
        dim: d,
        geometry: *g,
        blocks,
        skipped,
    })
}

/// Pointwise synthesis `Σ_j Σ_n c_{n,j} η̂_{n,j}(ξ)`, restricted to patches
/// whose support contains `ξ`.
pub fn synthesize(c: &CoefficientSet, b: &Bapu, xi: &[f64]) -> Result<Complex64> {
    let cov = b.covering();
    c.check_covering(cov)?;
    let d = cov.dim();
    if xi.len() != d {
        return Err(Error::domain("point dimension mismatch"));
    }
    let g = c.geometry();
    let halfside = g.halfside;
    let n_c = g.n_c as i64;
    let phis = b.phi_values(xi);
    if phis.is_empty() {
        return Ok(Complex64::default());
    }
    let mut acc = Complex64::default();
    for (j, phi) in phis {
        let Some(block) = c.block_for(j) else { continue };
        let v = cov.reference_coords(j, xi);
        let mut outside = false;
        for i in 0..d {
            if (v[i] - cov.p0()[i]).abs() > halfside {
                outside = true;
                break;
            }
        }
        if outside {
            continue;
        }
        // Per-axis phase tables e^{i(π/a) n_i v_i}.
        let side = (2 * n_c + 1) as usize;
        let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        for i in 0..d {
            let base = std::f64::consts::PI / halfside * v[i];
            tables.push(
                (-n_c..=n_c)
                    .map(|ni| Complex64::from_polar(1.0, base * ni as f64))
                    .collect(),
            );
        }
        let det = cov.patches()[j].map.det();
        let amp = (2.0 * halfside).powf(-(d as f64) / 2.0) / det.sqrt() * phi;
        let mut patch_sum = Complex64::default();
        for (flat, value) in block.values.iter().enumerate() {
            if value.re == 0.0 && value.im == 0.0 {
                continue;
            }
            let mut rem = flat;
            let mut phase = Complex64::new(1.0, 0.0);
            for i in (0..d).rev() {
                phase *= tables[i][rem % side];
                rem /= side;
            }
            patch_sum += value * phase;
        }
        acc += patch_sum * amp;
    }
    Ok(acc)
}

/// Cached evaluator for time-domain atoms of one patch.
///
/// `μ_j = F^{-1}(φ_j ∘ T_j)` is computed by direct quadrature of the inverse
/// Fourier integral over the reference cube; atoms follow from
/// `η_{n,j}(x) = (2a)^{-d/2} |T_j|^{1/2} e^{i x·b_j} μ_j(π n / a + A_j^T x)`.
pub struct EtaTimeEvaluator {
    patch: usize,
    geometry: FrameGeometry,
    dim: usize,
    grid: usize,
    /// `φ_j(T_j ζ)` on the grid, row-major.
    samples: Vec<f64>,
    cube_lo: Vec<f64>,
    step: f64,
    offset: Vec<f64>,
    scales: Vec<f64>,
    det: f64,
}

impl EtaTimeEvaluator {
    pub fn new(b: &Bapu, g: &FrameGeometry, j: usize, grid: usize) -> Result<Self> {
        if grid < 64 {
            return Err(Error::domain("eta_time quadrature needs grid ≥ 64"));
        }
        let cov = b.covering();
        let patch = cov.patch(j)?;
        let d = cov.dim();
        let halfside = g.halfside;
        let p0 = cov.p0().to_vec();
        let step = 2.0 * halfside / grid as f64;
        let total = grid.pow(d as u32);
        let mut cube_lo = vec![0.0; d];
        let mut img_lo = vec![0.0; d];
        let mut img_hi = vec![0.0; d];
        for i in 0..d {
            cube_lo[i] = p0[i] - halfside;
            img_lo[i] = patch.center[i] - patch.map.scales()[i] * halfside;
            img_hi[i] = patch.center[i] + patch.map.scales()[i] * halfside;
        }
        let mut cand = Vec::new();
        cov.candidates_for_bbox(&img_lo, &img_hi, &mut cand);
        let mut samples = vec![0.0; total];
        let mut idx = vec![0usize; d];
        let mut zeta = vec![0.0; d];
        for (flat, sample) in samples.iter_mut().enumerate() {
            let mut rem = flat;
            for i in (0..d).rev() {
                idx[i] = rem % grid;
                rem /= grid;
            }
            for i in 0..d {
                zeta[i] = cube_lo[i] + (idx[i] as f64 + 0.5) * step;
            }
            let xi = patch.map.apply(&zeta);
            *sample = b.phi_among(j, &cand, &xi);
        }
        Ok(Self {
            patch: j,
            geometry: *g,
            dim: d,
            grid,
            samples,
            cube_lo,
            step,
            offset: patch.map.offset().to_vec(),
            scales: patch.map.scales().to_vec(),
            det: patch.map.det(),
        })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    /// `μ_j(y) = (2π)^{-d/2} ∫ φ_j(T_j ζ) e^{i y·ζ} dζ` by midpoint quadrature.
    pub fn mu(&self, y: &[f64]) -> Complex64 {
        let d = self.dim;
        // Separable phases: e^{i y·ζ} = Π_i e^{i y_i ζ_i}.
        let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        for i in 0..d {
            tables.push(
                (0..self.grid)
                    .map(|k| {
                        let z = self.cube_lo[i] + (k as f64 + 0.5) * self.step;
                        Complex64::from_polar(1.0, y[i] * z)
                    })
                    .collect(),
            );
        }
        let mut acc = Complex64::default();
        for (flat, &s) in self.samples.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let mut rem = flat;
            let mut phase = Complex64::new(1.0, 0.0);
            for i in (0..d).rev() {
                phase *= tables[i][rem % self.grid];
                rem /= self.grid;
            }
            acc += phase * s;
        }
        acc * (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
            * self.step.powi(d as i32)
    }

    /// `η_{n,j}(x)`.
    pub fn eta(&self, n: &[i64], x: &[f64]) -> Complex64 {
        let d = self.dim;
        let a = self.geometry.halfside;
        let mut arg = vec![0.0; d];
        let mut mod_phase = 0.0;
        for i in 0..d {
            arg[i] = std::f64::consts::PI / a * n[i] as f64 + self.scales[i] * x[i];
            mod_phase += x[i] * self.offset[i];
        }
        let amp = (2.0 * a).powf(-(d as f64) / 2.0) * self.det.sqrt();
        self.mu(&arg) * Complex64::from_polar(amp, mod_phase)
    }

    /// Empirical decay constant `sup_y |μ_j(y)| (1 + |y|)^N` over a radial
    /// probe grid extending to `y_max`.
    pub fn decay_constant(&self, n_exponent: i32, y_max: f64, probes: usize) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        let dirs: Vec<Vec<f64>> = if d == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..8)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / 4.0;
                    vec![th.cos(), th.sin()]
                })
                .collect()
        };
        for dir in dirs {
            for p in 0..probes {
                let r = y_max * (p as f64 + 0.5) / probes as f64;
                let y: Vec<f64> = dir.iter().map(|u| u * r).collect();
                let v = self.mu(&y).norm() * (1.0 + r).powi(n_exponent);
                worst = worst.max(v);
            }
        }
        worst
    }
}

/// One-shot `η_{n,j}(x)`.
pub fn eta_time_eval(
    b: &Bapu,
    g: &FrameGeometry,
    j: usize,
    n: &[i64],
    x: &[f64],
    grid: usize,
) -> Result<Complex64> {
    Ok(EtaTimeEvaluator::new(b, g, j, grid)?.eta(n, x))
}

/// `Σ|c|² / ‖f‖²` — equals 1 for a tight frame up to quadrature and
/// truncation error. Requires the independent `L₂` oracle.
pub fn parseval_check(c: &CoefficientSet, f: &SpectralFunction) -> Result<f64> {
    let oracle = f
        .l2_norm_oracle()
        .ok_or_else(|| Error::domain("parseval_check requires an l2 oracle"))?;
    if oracle == 0.0 {
        return Err(Error::domain("parseval ratio is undefined for the zero function"));
    }
    Ok(c.total_energy() / (oracle * oracle))
}
