//! Structured coverings of a truncated annulus in `ℝ^d \ {0}`.
//!
//! Two constructions are provided:
//!
//! * [`build_covering`] — a deterministic greedy maximal packing over a
//!   quasi-norm-graded candidate lattice. Accepted centers carry covering
//!   balls `B(ξ_j, δ h̃(ξ_j))` and pairwise-disjoint packing balls
//!   `B(ξ_j, pack_ratio · δ h̃(ξ_j))`; the covering property is verified by
//!   sampling afterwards, doubling the covering radii (never the packing
//!   radii) up to three times if gaps remain.
//! * [`besov_covering`] — the explicit anisotropic dyadic decomposition into
//!   boxes `P_{j,k}` indexed by a scale `j ∈ ℤ` and a sign/size pattern
//!   `k ∈ {±1, ±2}^d` with at least one `|k_i| = 2`.
//!
//! Every patch is the affine image `T_j(reference set)` of one reference
//! set around `p₀`, with `T_j ζ = A_j (ζ − p₀) + ξ_j` and diagonal `A_j`.
//! Anisotropic balls are axis-aligned ellipsoids, so patch membership and
//! patch–patch intersection are exact (no root solves, no boundary
//! sampling).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::OnceLock;

use crate::anorm::{euclid, log_uniform, sample_direction, QuasiNormContext};
use crate::error::{Error, Result};
use crate::regulation::{HybridRegulation, RegulationRepr};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Reference-set geometry shared by all patches of a covering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchShape {
    /// Anisotropic balls: inner radius 1, support radius [`BALL_OUTER_FACTOR`].
    Ball,
    /// Axis-aligned boxes: inner half-side 1, support half-side [`BOX_OUTER_FACTOR`].
    Box,
}

/// Support sets of ball coverings are the 2-dilated reference ball.
pub const BALL_OUTER_FACTOR: f64 = 2.0;
/// Support boxes are 1.5× the tile; 2× would make second-nearest dyadic
/// corridors overlap, inflating neighbor counts beyond `self ± 1`.
pub const BOX_OUTER_FACTOR: f64 = 1.5;

/// Which region of a patch a membership test refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    /// The covering set itself: the ball `B(ξ_j, r_j)` or the box tile.
    Patch,
    /// The support set `Q_j` (outer-dilated reference image).
    Support,
}

/// Diagonal affine map `T ζ = A ζ + b` with `A = diag(scales)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    scales: Vec<f64>,
    offset: Vec<f64>,
    det: f64,
}

impl AffineMap {
    pub fn new(scales: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if scales.len() != offset.len() {
            return Err(Error::domain("affine map scales and offset must share a dimension"));
        }
        if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::domain("affine map scales must be positive and finite"));
        }
        let det = scales.iter().product();
        Ok(Self { scales, offset, det })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `|T| = |det A| = Π scales`.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn apply(&self, zeta: &[f64]) -> Vec<f64> {
        zeta.iter()
            .zip(&self.scales)
            .zip(&self.offset)
            .map(|((z, s), b)| z * s + b)
            .collect()
    }

    pub fn apply_inv(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .zip(&self.scales)
            .zip(&self.offset)
            .map(|((x, s), b)| (x - b) / s)
            .collect()
    }
}

/// Low- or high-frequency class of a patch: `J2` patches stay clear of the
/// split ball `B(0, C_split)` in the center-distance sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatchClass {
    J1,
    J2,
}

/// Scale/pattern label of a Besov box patch.
///
/// `k` lives in `{±1, ±2}^d` with at least one `|k_i| = 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub scale: i32,
    pub k: Vec<i8>,
}

/// One covering set: center, covering radius, affine map onto the reference
/// set, and classification.
#[derive(Debug, Clone)]
pub struct Patch {
    pub index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub map: AffineMap,
    pub klass: PatchClass,
    pub besov: Option<BesovIndex>,
}

/// A structured covering of the annulus `{r_min ≤ |ξ|_a ≤ r_max}`.
pub struct Covering {
    shape: PatchShape,
    patches: Vec<Patch>,
    p0: Vec<f64>,
    delta: f64,
    pack_ratio: f64,
    annulus: (f64, f64),
    c_split: f64,
    cover_scale: f64,
    neighbors: Vec<Vec<usize>>,
    regulation: HybridRegulation,
    // Derived at finalize():
    outer_factor: f64,
    /// `outer_factor^{a_i}` — support-ellipsoid semi-axis multipliers.
    outer_pow: Vec<f64>,
    bboxes: Vec<(Vec<f64>, Vec<f64>)>,
    shells: Vec<(f64, f64)>,
    center_norms: Vec<f64>,
    weights: Vec<f64>,
    max_neighbors: usize,
    id: OnceLock<String>,
}

impl std::fmt::Debug for Covering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Covering")
            .field("shape", &self.shape)
            .field("patches", &self.patches.len())
            .field("annulus", &self.annulus)
            .field("delta", &self.delta)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct PatchRepr {
    j: usize,
    center: Vec<f64>,
    radius: f64,
    scales: Vec<f64>,
    offset: Vec<f64>,
    klass: PatchClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    besov: Option<BesovIndex>,
}

#[derive(Serialize, Deserialize)]
struct CoveringRepr {
    shape: PatchShape,
    p0: Vec<f64>,
    delta: f64,
    pack_ratio: f64,
    annulus: (f64, f64),
    c_split: f64,
    cover_scale: f64,
    aniso: QuasiNormContext,
    regulation: RegulationRepr,
    patches: Vec<PatchRepr>,
    neighbors: Vec<Vec<usize>>,
}

impl Covering {
    pub fn shape(&self) -> PatchShape {
        self.shape
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch(&self, j: usize) -> Result<&Patch> {
        self.patches
            .get(j)
            .ok_or_else(|| Error::domain(format!("patch index {j} out of range")))
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pack_ratio(&self) -> f64 {
        self.pack_ratio
    }

    pub fn annulus(&self) -> (f64, f64) {
        self.annulus
    }

    /// The annulus on which full coverage is asserted: one covering ring of
    /// margin is excluded at each end to avoid truncation edge effects.
    pub fn inner_annulus(&self) -> (f64, f64) {
        (2.0 * self.annulus.0, self.annulus.1 / 2.0)
    }

    pub fn c_split(&self) -> f64 {
        self.c_split
    }

    /// Covering-radius doubling factor applied by the verification loop.
    pub fn cover_scale(&self) -> f64 {
        self.cover_scale
    }

    pub fn outer_factor(&self) -> f64 {
        self.outer_factor
    }

    pub fn regulation(&self) -> &HybridRegulation {
        &self.regulation
    }

    pub fn ctx(&self) -> &QuasiNormContext {
        self.regulation.ctx()
    }

    /// Symmetric adjacency: `i ∈ ñ(j)` iff the support sets `Q_i` and `Q_j`
    /// intersect. Every patch is its own neighbor.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn max_neighbor_count(&self) -> usize {
        self.max_neighbors
    }

    /// `h̃(ξ_j)` — the regulation weight at the patch center.
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn center_norm(&self, j: usize) -> f64 {
        self.center_norms[j]
    }

    /// Conservative quasi-norm range of the support set `Q_j`.
    pub fn shell(&self, j: usize) -> (f64, f64) {
        self.shells[j]
    }

    /// Coordinate bounding box of the support set `Q_j`.
    pub fn bbox(&self, j: usize) -> (&[f64], &[f64]) {
        let (lo, hi) = &self.bboxes[j];
        (lo, hi)
    }

    /// Reference coordinates `T_j^{-1} ξ`.
    pub fn reference_coords(&self, j: usize, xi: &[f64]) -> Vec<f64> {
        self.patches[j].map.apply_inv(xi)
    }

    /// Exact membership of `ξ` in the patch or its support set.
    pub fn contains(&self, j: usize, xi: &[f64], zone: Zone) -> bool {
        let p = &self.patches[j];
        let factor = match zone {
            Zone::Patch => 1.0,
            Zone::Support => self.outer_factor,
        };
        match self.shape {
            PatchShape::Ball => {
                // B(c, f·r) is the ellipsoid |D_a(1/(f·r))(ξ−c)| ≤ 1 with
                // semi-axes (f·r)^{a_i} = f^{a_i} · scales_i.
                let mut sum = 0.0;
                for i in 0..xi.len() {
                    let semi = match zone {
                        Zone::Patch => p.map.scales[i],
                        Zone::Support => self.outer_pow[i] * p.map.scales[i],
                    };
                    let v = (xi[i] - p.center[i]) / semi;
                    sum += v * v;
                }
                sum <= 1.0
            }
            PatchShape::Box => {
                for i in 0..xi.len() {
                    if (xi[i] - p.center[i]).abs() > factor * p.map.scales[i] {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Pushes indices of patches whose support bounding box contains `ξ`.
    pub fn candidates_into(&self, xi: &[f64], out: &mut Vec<usize>) {
        out.clear();
        'patch: for (j, (lo, hi)) in self.bboxes.iter().enumerate() {
            for i in 0..xi.len() {
                if xi[i] < lo[i] || xi[i] > hi[i] {
                    continue 'patch;
                }
            }
            out.push(j);
        }
    }

    /// Pushes indices of patches whose support bounding box intersects the
    /// given coordinate box.
    pub fn candidates_for_bbox(&self, lo: &[f64], hi: &[f64], out: &mut Vec<usize>) {
        out.clear();
        'patch: for (j, (blo, bhi)) in self.bboxes.iter().enumerate() {
            for i in 0..lo.len() {
                if hi[i] < blo[i] || lo[i] > bhi[i] {
                    continue 'patch;
                }
            }
            out.push(j);
        }
    }

    /// Patches whose support set contains `ξ` (exact, after bbox prefilter).
    pub fn supports_containing(&self, xi: &[f64]) -> Vec<usize> {
        let mut cand = Vec::new();
        self.candidates_into(xi, &mut cand);
        cand.retain(|&j| self.contains(j, xi, Zone::Support));
        cand
    }

    /// Content hash of the canonical JSON serialization.
    pub fn id(&self) -> &str {
        self.id.get_or_init(|| {
            let json = self.to_json_string().expect("covering serialization cannot fail");
            let mut hasher = Sha256::new();
            hasher.update(json.as_bytes());
            hex::encode(hasher.finalize())
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let repr = CoveringRepr {
            shape: self.shape,
            p0: self.p0.clone(),
            delta: self.delta,
            pack_ratio: self.pack_ratio,
            annulus: self.annulus,
            c_split: self.c_split,
            cover_scale: self.cover_scale,
            aniso: self.ctx().clone(),
            regulation: self.regulation.repr()?,
            patches: self
                .patches
                .iter()
                .map(|p| PatchRepr {
                    j: p.index,
                    center: p.center.clone(),
                    radius: p.radius,
                    scales: p.map.scales.clone(),
                    offset: p.map.offset.clone(),
                    klass: p.klass,
                    besov: p.besov.clone(),
                })
                .collect(),
            neighbors: self.neighbors.clone(),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let repr: CoveringRepr = serde_json::from_str(json)?;
        let regulation = HybridRegulation::from_repr(&repr.aniso, &repr.regulation)?;
        let dim = repr.p0.len();
        let mut patches = Vec::with_capacity(repr.patches.len());
        for (i, p) in repr.patches.into_iter().enumerate() {
            if p.j != i {
                return Err(Error::domain("patch indices must be contiguous"));
            }
            if p.center.len() != dim || p.scales.len() != dim || p.offset.len() != dim {
                return Err(Error::domain("patch dimensions do not match p0"));
            }
            patches.push(Patch {
                index: p.j,
                center: p.center,
                radius: p.radius,
                map: AffineMap::new(p.scales, p.offset)?,
                klass: p.klass,
                besov: p.besov,
            });
        }
        if repr.neighbors.len() != patches.len() {
            return Err(Error::domain("neighbor table length does not match patch count"));
        }
        Covering::finalize(
            repr.shape,
            patches,
            repr.p0,
            repr.delta,
            repr.pack_ratio,
            repr.annulus,
            repr.c_split,
            repr.cover_scale,
            Some(repr.neighbors),
            regulation,
        )
    }

    /// Assembles derived data (bounding boxes, shells, weights) and, when no
    /// adjacency is supplied, computes it by exact pairwise intersection of
    /// support sets behind a bounding-box prefilter.
    #[allow(clippy::too_many_arguments)]
    fn finalize(
        shape: PatchShape,
        patches: Vec<Patch>,
        p0: Vec<f64>,
        delta: f64,
        pack_ratio: f64,
        annulus: (f64, f64),
        c_split: f64,
        cover_scale: f64,
        neighbors: Option<Vec<Vec<usize>>>,
        regulation: HybridRegulation,
    ) -> Result<Self> {
        let ctx = regulation.ctx().clone();
        let outer_factor = match shape {
            PatchShape::Ball => BALL_OUTER_FACTOR,
            PatchShape::Box => BOX_OUTER_FACTOR,
        };
        let a = ctx.aniso().exponents().to_vec();
        let outer_pow: Vec<f64> = a.iter().map(|&ai| outer_factor.powf(ai)).collect();
        let n = patches.len();
        let mut bboxes = Vec::with_capacity(n);
        let mut shells = Vec::with_capacity(n);
        let mut center_norms = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for p in &patches {
            let semi: Vec<f64> = match shape {
                PatchShape::Ball => a
                    .iter()
                    .zip(p.map.scales())
                    .map(|(&ai, &s)| outer_factor.powf(ai) * s)
                    .collect(),
                PatchShape::Box => p.map.scales().iter().map(|&s| outer_factor * s).collect(),
            };
            let lo: Vec<f64> = p.center.iter().zip(&semi).map(|(c, s)| c - s).collect();
            let hi: Vec<f64> = p.center.iter().zip(&semi).map(|(c, s)| c + s).collect();
            // |·|_a is monotone in coordinate magnitudes, so corner points of
            // the bounding box bound the quasi-norm range of Q_j.
            let near: Vec<f64> = p
                .center
                .iter()
                .zip(&semi)
                .map(|(c, s)| (c.abs() - s).max(0.0))
                .collect();
            let far: Vec<f64> = p.center.iter().zip(&semi).map(|(c, s)| c.abs() + s).collect();
            let shell_lo = ctx.aniso_norm(&near)?;
            let shell_hi = ctx.aniso_norm(&far)?;
            let t = ctx.aniso_norm(&p.center)?;
            if t == 0.0 {
                return Err(Error::domain("patch centers must be nonzero"));
            }
            bboxes.push((lo, hi));
            shells.push((shell_lo, shell_hi));
            center_norms.push(t);
            weights.push(regulation.eval_with_norm(&p.center, t));
        }
        let mut cov = Self {
            shape,
            patches,
            p0,
            delta,
            pack_ratio,
            annulus,
            c_split,
            cover_scale,
            neighbors: Vec::new(),
            regulation,
            outer_factor,
            outer_pow,
            bboxes,
            shells,
            center_norms,
            weights,
            max_neighbors: 0,
            id: OnceLock::new(),
        };
        cov.neighbors = match neighbors {
            Some(nb) => nb,
            None => cov.compute_adjacency(),
        };
        cov.max_neighbors = cov.neighbors.iter().map(Vec::len).max().unwrap_or(0);
        Ok(cov)
    }

    fn compute_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.patches.len();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        let pairs: Vec<(usize, usize)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut cand = Vec::new();
                let (lo, hi) = &self.bboxes[i];
                self.candidates_for_bbox(lo, hi, &mut cand);
                cand.into_iter()
                    .filter(move |&k| k > i)
                    .filter(|&k| self.supports_intersect(i, k))
                    .map(move |k| (i, k))
                    .collect::<Vec<_>>()
            })
            .collect();
        for (i, k) in pairs {
            adj[i].push(k);
            adj[k].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Exact intersection test of the support sets `Q_i`, `Q_j`.
    pub fn supports_intersect(&self, i: usize, j: usize) -> bool {
        match self.shape {
            PatchShape::Box => {
                let (pi, pj) = (&self.patches[i], &self.patches[j]);
                for k in 0..pi.center.len() {
                    let gap = (pi.center[k] - pj.center[k]).abs();
                    let reach = self.outer_factor * (pi.map.scales[k] + pj.map.scales[k]);
                    if gap > reach + 1e-12 * reach {
                        return false;
                    }
                }
                true
            }
            PatchShape::Ball => {
                let (pi, pj) = (&self.patches[i], &self.patches[j]);
                ellipsoids_intersect(
                    self.ctx(),
                    &pi.center,
                    self.outer_factor * pi.radius,
                    &pj.center,
                    self.outer_factor * pj.radius,
                )
            }
        }
    }

    /// Drops one patch — a negative control for partition-of-unity checks.
    pub fn without_patch(&self, j: usize) -> Result<Self> {
        let mut patches: Vec<Patch> =
            self.patches.iter().filter(|p| p.index != j).cloned().collect();
        for (i, p) in patches.iter_mut().enumerate() {
            p.index = i;
        }
        Covering::finalize(
            self.shape,
            patches,
            self.p0.clone(),
            self.delta,
            self.pack_ratio,
            self.annulus,
            self.c_split,
            self.cover_scale,
            None,
            self.regulation.clone(),
        )
    }
}

/// Exact intersection of anisotropic balls `B(c₁, r₁)`, `B(c₂, r₂)`.
///
/// In `D_a(1/r₁)`-normalized coordinates the first ball is the unit ball and
/// the second an axis-aligned ellipsoid; the minimum of `|y|` over that
/// ellipsoid solves a one-parameter Lagrange equation, monotone in the
/// multiplier, found by bisection.
pub fn ellipsoids_intersect(
    ctx: &QuasiNormContext,
    c1: &[f64],
    r1: f64,
    c2: &[f64],
    r2: f64,
) -> bool {
    let a = ctx.aniso().exponents();
    let d = c1.len();
    let mut yt = vec![0.0; d];
    let mut s = vec![0.0; d];
    for i in 0..d {
        yt[i] = (c2[i] - c1[i]) / r1.powf(a[i]);
        s[i] = (r2 / r1).powf(a[i]);
    }
    // Center of ellipsoid 2 inside the unit ball?
    if euclid(&yt) <= 1.0 {
        return true;
    }
    // Origin inside ellipsoid 2?
    let g0: f64 = yt.iter().zip(&s).map(|(y, si)| (y / si) * (y / si)).sum();
    if g0 <= 1.0 {
        return true;
    }
    // Root of g(μ) = Σ yt_i² s_i² / (s_i² + μ)² = 1 on μ > 0.
    let g = |mu: f64| -> f64 {
        yt.iter()
            .zip(&s)
            .map(|(y, si)| {
                let q = y * si / (si * si + mu);
                q * q
            })
            .sum()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while g(hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return false;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let dist2: f64 = yt
        .iter()
        .zip(&s)
        .map(|(y, si)| {
            let v = y * mu / (si * si + mu);
            v * v
        })
        .sum();
    dist2 <= 1.0 + 1e-9
}

// ---------------------------------------------------------------------------
// Greedy graded ball covering
// ---------------------------------------------------------------------------

const VERIFY_SEED: u64 = 0xc0fe_f11e;
const MAX_COVER_DOUBLINGS: u32 = 3;
const PRECONDITION_PROBES: usize = 512;

/// Builds a structured ball covering of the annulus by greedy maximal
/// packing over a graded candidate lattice (see module docs).
///
/// Preconditions: `0 < r_min < r_max`, `pack_ratio ∈ (0, 1)`,
/// `candidate_resolution ≥ 32`, and the origin-exclusion margin
/// `δ h̃(ξ) < |ξ|_a / (2 K)` on the annulus.
pub fn build_covering(
    h: &HybridRegulation,
    delta: f64,
    pack_ratio: f64,
    annulus: (f64, f64),
    candidate_resolution: u32,
) -> Result<Covering> {
    let (r_min, r_max) = annulus;
    if !(r_min > 0.0) || !(r_min < r_max) {
        return Err(Error::domain(format!(
            "annulus must satisfy 0 < r_min < r_max, got ({r_min}, {r_max})"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("delta must be positive"));
    }
    if !(pack_ratio > 0.0 && pack_ratio < 1.0) {
        return Err(Error::domain("pack_ratio must lie in (0, 1)"));
    }
    if candidate_resolution < 32 {
        return Err(Error::domain("candidate_resolution must be at least 32"));
    }
    let ctx = h.ctx().clone();
    let d = ctx.dim();
    if d > 2 {
        return Err(Error::domain("the graded candidate lattice is implemented for d ≤ 2"));
    }
    let k_est = ctx.k()?;
    check_origin_margin(h, delta, annulus, k_est)?;

    // Candidate lattice, graded in ascending quasi-norm. Target spacing is a
    // fixed fraction of the local packing radius; resolution 32 gives half
    // the packing radius, and doubling the resolution halves the spacing.
    struct Candidate {
        point: Vec<f64>,
        norm: f64,
        h_val: f64,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut t = r_min;
    let mut shell_idx = 0usize;
    while t <= r_max {
        let h_min = h.shell_min(t, 16)?;
        let sigma = pack_ratio * delta * h_min * 16.0 / candidate_resolution as f64;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("regulation produced a non-positive lattice spacing"));
        }
        if d == 1 {
            for sign in [1.0, -1.0] {
                let point = vec![sign * t];
                let h_val = h.eval_with_norm(&point, t);
                candidates.push(Candidate { point, norm: t, h_val });
            }
        } else {
            // Walk the shell with a locally adaptive angular step: the
            // quasi-distance between adjacent shell points is t·|Δu|_a by
            // homogeneity, and its θ-dependence under anisotropy makes a
            // uniform angular count wasteful.
            let target = sigma / t;
            let theta0 = if shell_idx % 2 == 0 { 0.0 } else { 0.5 * target };
            let mut theta = theta0;
            let mut dtheta = target; // decent starting guess, refined below
            let two_pi = 2.0 * std::f64::consts::PI;
            while theta < theta0 + two_pi {
                let u = [theta.cos(), theta.sin()];
                let point = ctx.point_with_norm(t, &u);
                let h_val = h.eval_with_norm(&point, t);
                candidates.push(Candidate { point, norm: t, h_val });
                // Calibrate the next step so the gap lands near the target.
                let mut guard = 0;
                loop {
                    let u2 = [(theta + dtheta).cos(), (theta + dtheta).sin()];
                    let diff = [u[0] - u2[0], u[1] - u2[1]];
                    let gap = ctx.aniso_norm(&diff)?;
                    if gap > target && dtheta > 1e-7 {
                        dtheta *= 0.5;
                    } else if gap < 0.35 * target && dtheta < two_pi {
                        dtheta *= 1.6;
                    } else {
                        break;
                    }
                    guard += 1;
                    if guard > 64 {
                        break;
                    }
                }
                theta += dtheta;
            }
        }
        t += sigma;
        shell_idx += 1;
    }

    // Greedy maximal packing: accept a candidate iff its packing ball stays
    // disjoint (center distance > radius sum) from all accepted ones. Only
    // accepted centers with norm in [t/(2K+1), t] can conflict, and the
    // coordinate bound |v|_a ≥ |v_i|^{1/a_i} rejects almost all of those via
    // precomputed per-axis radius powers (no root solves, no powf).
    struct Accepted {
        point: Vec<f64>,
        norm: f64,
        h_val: f64,
        pack_r: f64,
        pack_pow: Vec<f64>,
    }
    let mut accepted: Vec<Accepted> = Vec::new();
    let a_exp = ctx.aniso().exponents().to_vec();
    let two_pow: Vec<f64> = a_exp.iter().map(|&ai| 2f64.powf(ai)).collect();
    for cand in candidates {
        let pack_r = pack_ratio * delta * cand.h_val;
        let pack_pow: Vec<f64> = a_exp.iter().map(|&ai| pack_r.powf(ai)).collect();
        let lo_norm = cand.norm / (2.0 * k_est + 1.0);
        let start = accepted.partition_point(|p| p.norm < lo_norm);
        let mut free = true;
        'conflict: for acc in &accepted[start..] {
            // d(c, c') ≤ r + r' needs |v_i| ≤ (r + r')^{a_i} ≤ (2 max)^{a_i}.
            for i in 0..d {
                let gap = (cand.point[i] - acc.point[i]).abs();
                if gap > two_pow[i] * pack_pow[i].max(acc.pack_pow[i]) {
                    continue 'conflict;
                }
            }
            let bound = pack_r + acc.pack_r;
            let dist = ctx.quasi_dist(&cand.point, &acc.point)?;
            if dist <= bound {
                free = false;
                break;
            }
        }
        if free {
            accepted.push(Accepted {
                point: cand.point,
                norm: cand.norm,
                h_val: cand.h_val,
                pack_r,
                pack_pow,
            });
        }
    }
    if accepted.is_empty() {
        return Err(Error::domain("no candidates were accepted; annulus too thin"));
    }

    // Coverage verification with covering-radius doubling (packing radii are
    // untouched, preserving disjointness).
    let inner = (2.0 * r_min, r_max / 2.0);
    if inner.0 >= inner.1 {
        return Err(Error::domain("annulus too narrow: no interior ring to verify"));
    }
    let n_verify = 20_000.max(4 * accepted.len());
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let samples: Vec<Vec<f64>> = (0..n_verify)
        .map(|_| {
            let t = log_uniform(&mut rng, inner.0, inner.1);
            let u = sample_direction(&mut rng, d);
            ctx.point_with_norm(t, &u)
        })
        .collect();
    let norms: Vec<f64> = accepted.iter().map(|p| p.norm).collect();
    let mut cover_scale = 1.0f64;
    for attempt in 0..=MAX_COVER_DOUBLINGS {
        let scale = cover_scale * delta;
        // Per-axis semi-axes of the covering ellipsoids at this scale.
        let cover_pow: Vec<Vec<f64>> = accepted
            .iter()
            .map(|acc| {
                let r = scale * acc.h_val;
                a_exp.iter().map(|&ai| r.powf(ai)).collect()
            })
            .collect();
        let uncovered: Vec<Vec<f64>> = samples
            .par_iter()
            .filter(|xi| {
                let t = ctx.aniso_norm(xi).expect("verification samples are finite");
                let window = (2.0 * k_est + 1.0).max(2.0);
                let start = norms.partition_point(|&n| n < t / window);
                let end = norms.partition_point(|&n| n <= t * window);
                !(start..end).any(|ai| {
                    let acc = &accepted[ai];
                    let mut sum = 0.0;
                    for i in 0..d {
                        let v = (xi[i] - acc.point[i]) / cover_pow[ai][i];
                        sum += v * v;
                    }
                    sum <= 1.0
                })
            })
            .cloned()
            .collect();
        if uncovered.is_empty() {
            break;
        }
        if attempt == MAX_COVER_DOUBLINGS {
            return Err(Error::Construction {
                message: format!(
                    "covering verification failed after {MAX_COVER_DOUBLINGS} radius doublings"
                ),
                uncovered: uncovered.into_iter().take(64).collect(),
            });
        }
        cover_scale *= 2.0;
        check_origin_margin(h, cover_scale * delta, annulus, k_est)?;
    }

    // Assemble patches. The affine scale equals the covering radius so that
    // T_j maps the unit reference ball onto the covering ball exactly.
    let p0 = reference_center(&ctx, k_est, PatchShape::Ball);
    let c_split = 4.0 * r_min;
    let mut patches = Vec::with_capacity(accepted.len());
    for (idx, acc) in accepted.iter().enumerate() {
        let radius = cover_scale * delta * acc.h_val;
        let scales: Vec<f64> = a_exp.iter().map(|&ai| radius.powf(ai)).collect();
        let offset: Vec<f64> = acc
            .point
            .iter()
            .zip(scales.iter().zip(&p0))
            .map(|(c, (s, p))| c - s * p)
            .collect();
        let klass =
            if acc.norm > radius + c_split { PatchClass::J2 } else { PatchClass::J1 };
        patches.push(Patch {
            index: idx,
            center: acc.point.clone(),
            radius,
            map: AffineMap::new(scales, offset)?,
            klass,
            besov: None,
        });
    }
    Covering::finalize(
        PatchShape::Ball,
        patches,
        p0,
        delta,
        pack_ratio,
        annulus,
        c_split,
        cover_scale,
        None,
        h.clone(),
    )
}

/// `δ h̃(ξ) < |ξ|_a / (2K)` probed on log-spaced shells.
fn check_origin_margin(
    h: &HybridRegulation,
    delta: f64,
    annulus: (f64, f64),
    k_est: f64,
) -> Result<()> {
    let (r_min, r_max) = annulus;
    for i in 0..PRECONDITION_PROBES {
        let t = (r_min.ln()
            + (r_max.ln() - r_min.ln()) * i as f64 / (PRECONDITION_PROBES - 1) as f64)
            .exp();
        let (_, h_max) = shell_extrema(h, t)?;
        if delta * h_max >= t / (2.0 * k_est) {
            return Err(Error::domain(format!(
                "delta too large: δ·h̃ = {} ≥ |ξ|_a/(2K) = {} at |ξ|_a = {t}",
                delta * h_max,
                t / (2.0 * k_est)
            )));
        }
    }
    Ok(())
}

fn shell_extrema(h: &HybridRegulation, t: f64) -> Result<(f64, f64)> {
    if h.is_radial() {
        let v = h.eval_radial(t)?;
        return Ok((v, v));
    }
    let ctx = h.ctx();
    let d = ctx.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0xabcd);
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for _ in 0..32 {
        let u = sample_direction(&mut rng, d);
        let xi = ctx.point_with_norm(t, &u);
        let v = h.eval_with_norm(&xi, t);
        min = min.min(v);
        max = max.max(v);
    }
    Ok((min, max))
}

/// Reference-set center: on the first coordinate axis with `|p₀|_a = 3K`,
/// keeping both reference sets clear of the origin. Box reference sets
/// additionally need the first coordinate above the outer half-side.
fn reference_center(ctx: &QuasiNormContext, k_est: f64, shape: PatchShape) -> Vec<f64> {
    let a1 = ctx.aniso().exponents()[0];
    let mut x = (3.0 * k_est).powf(a1);
    if matches!(shape, PatchShape::Box) {
        x = x.max(2.0 * BOX_OUTER_FACTOR);
    }
    let mut p0 = vec![0.0; ctx.dim()];
    p0[0] = x;
    p0
}

// ---------------------------------------------------------------------------
// Explicit anisotropic dyadic (Besov) covering
// ---------------------------------------------------------------------------

/// The explicit box covering with patches `P_{j,k}` for `j ∈ [j_min, j_max]`
/// and `k ∈ {±1, ±2}^d` with at least one `|k_i| = 2`.
///
/// Coordinate `i` of `P_{j,k}` spans `sgn(k_i) · [((|k_i|−1) 2^{j−1})^{a_i},
/// (|k_i| 2^{j−1})^{a_i}]`, and the generating map is
/// `T_{j,k} = D_a(2^j) B(k) · + b_{j,k}` with `B(k) = diag(h(k)_i)`,
/// `h(k)_i = 2^{−(a_i+1)}` for `|k_i| = 1` and `(1 − 2^{−a_i})/2` for
/// `|k_i| = 2`.
pub fn besov_covering(ctx: &QuasiNormContext, j_min: i32, j_max: i32) -> Result<Covering> {
    if j_min > j_max {
        return Err(Error::domain(format!("j_min = {j_min} exceeds j_max = {j_max}")));
    }
    let k_est = ctx.k()?;
    let d = ctx.dim();
    let a = ctx.aniso().exponents().to_vec();
    let patterns = besov_patterns(d);
    let p0 = reference_center(ctx, k_est, PatchShape::Box);

    // Circumscribed-corner factor of the anisotropic cube Q_j.
    let corner = ctx.aniso_norm(&vec![1.0; d])?;
    let annulus = (corner * 2f64.powi(j_min - 1), 2f64.powi(j_max));
    let c_split = 4.0 * annulus.0;

    let mut patches = Vec::new();
    for j in j_min..=j_max {
        let two_j = 2f64.powi(j);
        for k in &patterns {
            let mut center = vec![0.0; d];
            let mut scales = vec![0.0; d];
            for i in 0..d {
                let ki = k[i];
                let mag = ki.unsigned_abs() as f64;
                let lo = ((mag - 1.0) * 2f64.powi(j - 1)).powf(a[i]);
                let hi = (mag * 2f64.powi(j - 1)).powf(a[i]);
                center[i] = (ki.signum() as f64) * 0.5 * (lo + hi);
                let hk = if ki.abs() == 1 {
                    2f64.powf(-(a[i] + 1.0))
                } else {
                    (1.0 - 2f64.powf(-a[i])) / 2.0
                };
                scales[i] = two_j.powf(a[i]) * hk;
                debug_assert!(
                    (scales[i] - 0.5 * (hi - lo)).abs() <= 1e-12 * scales[i].max(1e-300),
                    "B(k) scale must reproduce the tile half-width"
                );
            }
            let radius = ctx.aniso_norm(&scales)?; // circumscribed quasi-radius
            let offset: Vec<f64> = center
                .iter()
                .zip(scales.iter().zip(&p0))
                .map(|(c, (s, p))| c - s * p)
                .collect();
            let norm = ctx.aniso_norm(&center)?;
            let klass = if norm > radius + c_split { PatchClass::J2 } else { PatchClass::J1 };
            patches.push(Patch {
                index: patches.len(),
                center,
                radius,
                map: AffineMap::new(scales, offset)?,
                klass,
                besov: Some(BesovIndex { scale: j, k: k.clone() }),
            });
        }
    }
    let regulation = crate::regulation::alpha_regulation(ctx, 1.0)?;
    // delta/pack_ratio are nominal metadata for box coverings: the tiles are
    // explicit, not produced by the packing construction.
    Covering::finalize(
        PatchShape::Box,
        patches,
        p0,
        1.0,
        0.5,
        annulus,
        c_split,
        1.0,
        None,
        regulation,
    )
}

/// All `k ∈ {±1, ±2}^d` with at least one `|k_i| = 2`, in lexicographic order.
fn besov_patterns(d: usize) -> Vec<Vec<i8>> {
    let choices = [-2i8, -1, 1, 2];
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let k: Vec<i8> = idx.iter().map(|&i| choices[i]).collect();
        if k.iter().any(|&ki| ki.abs() == 2) {
            out.push(k);
        }
        let mut carry = d;
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < choices.len() {
                carry = i;
                break;
            }
            idx[i] = 0;
        }
        if carry == d {
            break;
        }
    }
    out
}

/// 1-D α-modulation knots `{±n^β} ∪ {±n^{−β}}` for `β = 1/(1−α)`, sorted
/// ascending with the duplicates at ±1 merged. `α = 1` is the dyadic case
/// and is served by [`besov_covering`].
pub fn alpha_knots_1d(alpha: f64, n_max: u32) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if n_max < 2 {
        return Err(Error::domain("n_max must be at least 2"));
    }
    let beta = 1.0 / (1.0 - alpha);
    let mut knots = Vec::with_capacity(4 * n_max as usize);
    for n in 1..=n_max {
        let n = n as f64;
        for v in [n.powf(beta), n.powf(-beta)] {
            knots.push(v);
            knots.push(-v);
        }
    }
    knots.sort_by(|x, y| x.partial_cmp(y).expect("knots are finite"));
    knots.dedup();
    Ok(knots)
}

// ---------------------------------------------------------------------------
// Admissibility diagnostics
// ---------------------------------------------------------------------------

/// Sampled admissibility statistics; failures are carried in the report
/// rather than raised.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// Fraction of inner-annulus samples inside at least one patch.
    pub covered_fraction: f64,
    /// Largest patch-membership count over the samples.
    pub max_overlap: usize,
    /// `min_j (|ξ_j|_a − K·r_j)` — a center-distance margin to the origin.
    pub min_dist_to_origin: f64,
    /// Largest entry of `A_k^{-1} A_j` over neighbor pairs (diagonal maps, so
    /// the largest scale ratio).
    pub max_transition_norm: f64,
    pub n_samples: usize,
    /// Up to 64 uncovered sample points.
    pub uncovered: Vec<Vec<f64>>,
}

/// Samples the covering's inner annulus log-uniformly in `|·|_a` and reports
/// coverage, overlap, origin margin, and transition-norm statistics.
/// Requires `n_samples ≥ 10⁴`.
pub fn check_admissible(c: &Covering, n_samples: usize, seed: u64) -> Result<AdmissibilityReport> {
    if n_samples < 10_000 {
        return Err(Error::domain("check_admissible needs at least 10^4 samples"));
    }
    let ctx = c.ctx();
    let d = c.dim();
    let k_est = ctx.k()?;
    let (lo, hi) = c.inner_annulus();
    if !(lo < hi) {
        return Err(Error::domain("inner annulus is empty; widen the covering annulus"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| {
            let t = log_uniform(&mut rng, lo, hi);
            let u = sample_direction(&mut rng, d);
            ctx.point_with_norm(t, &u)
        })
        .collect();
    let per_sample: Vec<(usize, bool)> = samples
        .par_iter()
        .map(|xi| {
            let mut cand = Vec::new();
            c.candidates_into(xi, &mut cand);
            let count = cand.iter().filter(|&&j| c.contains(j, xi, Zone::Patch)).count();
            (count, count > 0)
        })
        .collect();
    let covered = per_sample.iter().filter(|(_, inside)| *inside).count();
    let max_overlap = per_sample.iter().map(|(n, _)| *n).max().unwrap_or(0);
    let uncovered: Vec<Vec<f64>> = samples
        .iter()
        .zip(&per_sample)
        .filter(|(_, (_, inside))| !*inside)
        .map(|(xi, _)| xi.clone())
        .take(64)
        .collect();

    let min_dist_to_origin = (0..c.len())
        .map(|j| c.center_norm(j) - k_est * c.patches()[j].radius)
        .fold(f64::INFINITY, f64::min);

    let mut max_transition: f64 = 0.0;
    for (j, nbrs) in c.neighbors().iter().enumerate() {
        for &i in nbrs {
            let si = c.patches()[i].map.scales();
            let sj = c.patches()[j].map.scales();
            for axis in 0..d {
                max_transition = max_transition.max(sj[axis] / si[axis]);
            }
        }
    }

    Ok(AdmissibilityReport {
        covered_fraction: covered as f64 / n_samples as f64,
        max_overlap,
        min_dist_to_origin,
        max_transition_norm: max_transition,
        n_samples,
        uncovered,
    })
}

/// Mutual cross-overlap counts between two coverings of the same space:
/// `(sup_i #{j : A_i ∩ B_j ≠ ∅}, sup_j #{i : B_j ∩ A_i ≠ ∅})` over covering
/// sets, by exact intersection tests.
pub fn cross_overlap(c1: &Covering, c2: &Covering) -> Result<(usize, usize)> {
    if c1.shape() != c2.shape() {
        return Err(Error::domain("cross_overlap requires coverings of the same shape"));
    }
    if c1.dim() != c2.dim() {
        return Err(Error::domain("cross_overlap requires matching dimensions"));
    }
    let ctx = c1.ctx();
    let count_hits = |from: &Covering, to: &Covering| -> usize {
        (0..from.len())
            .into_par_iter()
            .map(|i| {
                let pi = &from.patches()[i];
                (0..to.len())
                    .filter(|&j| {
                        let pj = &to.patches()[j];
                        match from.shape() {
                            PatchShape::Ball => ellipsoids_intersect(
                                ctx, &pi.center, pi.radius, &pj.center, pj.radius,
                            ),
                            PatchShape::Box => (0..pi.center.len()).all(|k| {
                                (pi.center[k] - pj.center[k]).abs()
                                    <= pi.map.scales()[k] + pj.map.scales()[k]
                            }),
                        }
                    })
                    .count()
            })
            .max()
            .unwrap_or(0)
    };
    Ok((count_hits(c1, c2), count_hits(c2, c1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anorm::Anisotropy;
    use crate::regulation::alpha_regulation;

    fn ctx_with_k(a: Vec<f64>) -> QuasiNormContext {
        let mut c = QuasiNormContext::with_default_tol(Anisotropy::new(a).unwrap());
        c.estimate_k(20_000, 1).unwrap();
        c
    }

    fn d1_covering(alpha: f64) -> Covering {
        let c = ctx_with_k(vec![1.0]);
        let h = alpha_regulation(&c, alpha).unwrap();
        build_covering(&h, 0.25, 0.35, (2f64.powi(-6), 2f64.powi(6)), 32).unwrap()
    }

    #[test]
    fn affine_map_basics() {
        let m = AffineMap::new(vec![2.0, 0.5], vec![1.0, -1.0]).unwrap();
        assert_eq!(m.det(), 1.0);
        let x = m.apply(&[1.0, 2.0]);
        assert_eq!(x, vec![3.0, 0.0]);
        let back = m.apply_inv(&x);
        assert_eq!(back, vec![1.0, 2.0]);
        assert!(AffineMap::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn ellipsoid_intersection_isotropic_matches_disks() {
        let c = ctx_with_k(vec![1.0, 1.0]);
        // Disks: intersect iff |c1 − c2| ≤ r1 + r2.
        assert!(ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[1.5, 0.0], 1.0));
        assert!(!ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[2.5, 0.0], 1.0));
        // Tangency within tolerance.
        assert!(ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[2.0, 0.0], 1.0));
        // Off-axis pair.
        let s = 1.4 / 2f64.sqrt();
        assert!(ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[s, s], 0.5));
        assert!(!ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[1.2, 1.2], 0.5));
    }

    #[test]
    fn ellipsoid_intersection_anisotropic() {
        let c = ctx_with_k(vec![0.5, 1.5]);
        // Semi-axes of B(c, r) are (r^{1/2}, r^{3/2}). B(0,1) spans x ∈ [−1,1];
        // B((3,0), 4) spans x ∈ [3−2, 3+2] = [1, 5]: tangent → intersect.
        assert!(ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[3.0, 0.0], 4.0));
        // Shift right: disjoint.
        assert!(!ellipsoids_intersect(&c, &[0.0, 0.0], 1.0, &[3.2, 0.0], 4.0));
    }

    #[test]
    fn build_rejects_bad_arguments() {
        let c = ctx_with_k(vec![1.0]);
        let h = alpha_regulation(&c, 0.5).unwrap();
        assert!(build_covering(&h, 0.25, 0.35, (1.0, 1.0), 32).is_err());
        assert!(build_covering(&h, 0.25, 0.35, (2.0, 1.0), 32).is_err());
        assert!(build_covering(&h, 0.25, 0.35, (0.1, 10.0), 31).is_err());
        assert!(build_covering(&h, 0.25, 1.5, (0.1, 10.0), 32).is_err());
        // δ too large trips the origin-exclusion margin.
        assert!(build_covering(&h, 5.0, 0.35, (0.1, 10.0), 32).is_err());
        // Context without an estimated K is rejected.
        let raw = QuasiNormContext::with_default_tol(Anisotropy::new(vec![1.0]).unwrap());
        let h2 = alpha_regulation(&raw, 0.5).unwrap();
        assert!(build_covering(&h2, 0.25, 0.35, (0.1, 10.0), 32).is_err());
    }

    #[test]
    fn d1_dyadic_covering_structure() {
        let cov = d1_covering(1.0);
        assert!(cov.len() > 10);
        // Positive centers should grow geometrically.
        let mut pos: Vec<f64> = cov
            .patches()
            .iter()
            .filter(|p| p.center[0] > 0.0)
            .map(|p| p.center[0])
            .collect();
        pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in pos.windows(2) {
            let ratio = w[1] / w[0];
            assert!(
                (1.05..=4.0).contains(&ratio),
                "adjacent center ratio {ratio} outside [1.05, 4]"
            );
        }
        // Interval-sweep oracle: the union of covering intervals contains the
        // inner annulus on both sides.
        let (lo, hi) = cov.inner_annulus();
        for sign in [1.0, -1.0] {
            let mut ivs: Vec<(f64, f64)> = cov
                .patches()
                .iter()
                .filter(|p| p.center[0] * sign > 0.0)
                .map(|p| (sign * p.center[0] - p.radius, sign * p.center[0] + p.radius))
                .collect();
            ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut reach = lo;
            for (s, e) in ivs {
                if s > reach {
                    break;
                }
                reach = reach.max(e);
            }
            assert!(reach >= hi, "1-D sweep found a gap: reach {reach} < {hi}");
        }
    }

    #[test]
    fn packing_balls_pairwise_disjoint() {
        for alpha in [0.0, 0.5, 1.0] {
            let cov = d1_covering(alpha);
            let ctx = cov.ctx().clone();
            let n = cov.len();
            // Packing radius is pack_ratio·δ·h̃ regardless of cover-scale
            // doublings.
            let pr: Vec<f64> =
                (0..n).map(|j| cov.pack_ratio() * cov.delta() * cov.weight(j)).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = ctx
                        .quasi_dist(&cov.patches()[i].center, &cov.patches()[j].center)
                        .unwrap();
                    assert!(
                        d > pr[i] + pr[j],
                        "packing balls {i}, {j} overlap: {d} ≤ {} + {}",
                        pr[i],
                        pr[j]
                    );
                }
            }
        }
    }

    #[test]
    fn admissibility_d1() {
        let cov = d1_covering(0.5);
        let rep = check_admissible(&cov, 10_000, 7).unwrap();
        assert_eq!(rep.covered_fraction, 1.0, "uncovered: {:?}", rep.uncovered);
        assert!(rep.max_overlap <= 64);
        assert!(rep.min_dist_to_origin > 0.0);
        assert!(rep.max_transition_norm.is_finite());
        let rep2 = check_admissible(&cov, 10_000, 8).unwrap();
        assert!(
            (rep.max_transition_norm / rep2.max_transition_norm - 1.0).abs() < 1e-9,
            "transition norm is a covering property, not a sample property"
        );
        assert!(check_admissible(&cov, 9_999, 0).is_err());
    }

    #[test]
    fn overlap_stable_under_resolution_doubling() {
        let c = ctx_with_k(vec![1.0]);
        let h = alpha_regulation(&c, 0.5).unwrap();
        let ann = (2f64.powi(-6), 2f64.powi(6));
        let cov1 = build_covering(&h, 0.25, 0.35, ann, 32).unwrap();
        let cov2 = build_covering(&h, 0.25, 0.35, ann, 64).unwrap();
        let r1 = check_admissible(&cov1, 10_000, 3).unwrap();
        let r2 = check_admissible(&cov2, 10_000, 3).unwrap();
        assert!(r2.max_overlap <= r1.max_overlap.max(8));
        // Equivalence-class check: mutual cross-overlap counts stay small.
        let (ab, ba) = cross_overlap(&cov1, &cov2).unwrap();
        assert!(ab <= 64 && ba <= 64, "cross overlap ({ab}, {ba})");
    }

    #[test]
    fn besov_scale_matrix_entries() {
        // a_i = 1: |k_i| = 1 gives 2^{-(1+1)} = 1/4 and |k_i| = 2 gives
        // (1 − 2^{-1})/2 = 1/4.
        let c = ctx_with_k(vec![1.0, 1.0]);
        let cov = besov_covering(&c, 0, 0).unwrap();
        for p in cov.patches() {
            for &s in p.map.scales() {
                assert!((s - 0.25).abs() < 1e-12, "scale {s} ≠ 1/4 at j = 0, a = 1");
            }
        }
    }

    #[test]
    fn besov_d1_corridors_tile() {
        let c = ctx_with_k(vec![1.0]);
        let (j_min, j_max) = (-3, 4);
        let cov = besov_covering(&c, j_min, j_max).unwrap();
        // d = 1: patches are ±[2^{j−1}, 2^j]; interiors tile the annulus.
        let mut pos: Vec<(f64, f64)> = cov
            .patches()
            .iter()
            .filter(|p| p.center[0] > 0.0)
            .map(|p| (p.center[0] - p.map.scales()[0], p.center[0] + p.map.scales()[0]))
            .collect();
        pos.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(pos.len(), (j_max - j_min + 1) as usize);
        assert!((pos[0].0 - 2f64.powi(j_min - 1)).abs() < 1e-12);
        assert!((pos.last().unwrap().1 - 2f64.powi(j_max)).abs() < 1e-9);
        for w in pos.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-12, "corridors must abut exactly");
        }
        assert!(besov_covering(&c, 3, 2).is_err());
    }

    #[test]
    fn besov_d1_interior_corridors_have_three_neighbors() {
        let c = ctx_with_k(vec![1.0]);
        let cov = besov_covering(&c, -3, 4).unwrap();
        for (j, nbrs) in cov.neighbors().iter().enumerate() {
            let p = &cov.patches()[j];
            let scale = p.besov.as_ref().unwrap().scale;
            if scale > -3 && scale < 4 {
                assert_eq!(nbrs.len(), 3, "corridor at scale {scale}: neighbors {nbrs:?}");
            }
        }
    }

    #[test]
    fn single_scale_besov_patches_neighbor_only_themselves_in_d1() {
        let c = ctx_with_k(vec![1.0]);
        let cov = besov_covering(&c, 2, 2).unwrap();
        // Two corridors (±) far apart: each neighbors only itself.
        for (j, nbrs) in cov.neighbors().iter().enumerate() {
            assert_eq!(nbrs, &vec![j]);
        }
    }

    #[test]
    fn besov_d2_tiles_cover_and_do_not_double_cover() {
        let c = ctx_with_k(vec![0.5, 1.5]);
        let cov = besov_covering(&c, -4, 5).unwrap();
        let ctx = cov.ctx().clone();
        let (lo, hi) = cov.inner_annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cand = Vec::new();
        for _ in 0..20_000 {
            let t = log_uniform(&mut rng, lo, hi);
            let u = sample_direction(&mut rng, 2);
            let xi = ctx.point_with_norm(t, &u);
            cov.candidates_into(&xi, &mut cand);
            let strict = cand
                .iter()
                .filter(|&&j| {
                    let p = &cov.patches()[j];
                    (0..2).all(|i| {
                        (xi[i] - p.center[i]).abs() < p.map.scales()[i] * (1.0 - 1e-9)
                    })
                })
                .count();
            let closed =
                cand.iter().filter(|&&j| cov.contains(j, &xi, Zone::Patch)).count();
            assert!(closed >= 1, "uncovered point {xi:?}");
            assert!(strict <= 1, "interior double membership at {xi:?}");
        }
    }

    #[test]
    fn alpha_knots() {
        let k = alpha_knots_1d(0.0, 4).unwrap();
        // β = 1: {±1, ±2, ±3, ±4} ∪ {±1, ±1/2, ±1/3, ±1/4}, 14 distinct.
        assert_eq!(k.len(), 14);
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        let k = alpha_knots_1d(0.5, 3).unwrap();
        assert!(k.contains(&4.0) && k.contains(&9.0) && k.contains(&1.0));
        assert!(alpha_knots_1d(0.5, 1).is_err());
        assert!(alpha_knots_1d(1.0, 8).is_err());
    }

    #[test]
    fn json_round_trip_is_hash_identical() {
        let cov = d1_covering(0.5);
        let json = cov.to_json_string().unwrap();
        let back = Covering::from_json_str(&json).unwrap();
        assert_eq!(json, back.to_json_string().unwrap());
        assert_eq!(cov.id(), back.id());
        assert_eq!(cov.len(), back.len());
    }

    #[test]
    fn far_apart_ball_patches_are_not_neighbors() {
        let cov = d1_covering(1.0);
        // Opposite signs never touch.
        for (j, nbrs) in cov.neighbors().iter().enumerate() {
            let sj = cov.patches()[j].center[0].signum();
            for &i in nbrs {
                if i != j {
                    assert_eq!(cov.patches()[i].center[0].signum(), sj);
                }
            }
        }
    }

    #[test]
    fn klass_split_matches_center_distance_rule() {
        let cov = d1_covering(0.5);
        for p in cov.patches() {
            let norm = cov.center_norm(p.index);
            let expected = if norm > p.radius + cov.c_split() {
                PatchClass::J2
            } else {
                PatchClass::J1
            };
            assert_eq!(p.klass, expected);
        }
        // Both classes are populated on a wide annulus.
        assert!(cov.patches().iter().any(|p| p.klass == PatchClass::J1));
        assert!(cov.patches().iter().any(|p| p.klass == PatchClass::J2));
    }
}
