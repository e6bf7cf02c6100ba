//! Radius rules for graded coverings: ramp functions, hybrid regulation
//! functions, and empirical moderateness diagnostics.
//!
//! A hybrid regulation function `h̃(ξ) = ρ(|ξ|_a) h₁(ξ) + (1 − ρ(|ξ|_a)) h₂(ξ)`
//! blends a low-frequency rule `h₁` (vanishing at the origin at least
//! linearly) with a high-frequency rule `h₂` (bounded below), so that balls
//! `B(ξ, δ h̃(ξ))` never swallow the excluded frequency `0`. The α-modulation
//! family uses `h₁ = |ξ|_a^{2−α}`, `h₂ = |ξ|_a^α`.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anorm::{log_uniform, sample_direction, QuasiNormContext};
use crate::error::{Error, Result};

/// Polynomial smoothstep of order `s`: degree `2s+1`, equal to 0 at 0 and 1
/// at 1, with the first `s` derivatives vanishing at both ends. Input is
/// clamped to `[0, 1]`.
pub fn smoothstep(order: u32, x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let s = order as i64;
    let mut acc = 0.0;
    for n in 0..=s {
        let c = binom_f(s + n, n) * binom_f(2 * s + 1, s - n);
        acc += c * (-x).powi(n as i32);
    }
    acc * x.powi((s + 1) as i32)
}

fn binom_f(n: i64, k: i64) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Cutoff ρ on quasi-norm values: 1 up to `t_lo`, 0 from `t_hi`, a monotone
/// `C^s` smoothstep in between. Defaults follow the 2/3–4/3 transition band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampFunction {
    t_lo: f64,
    t_hi: f64,
    order: u32,
}

pub const DEFAULT_RAMP_ORDER: u32 = 3;

impl RampFunction {
    pub fn new(t_lo: f64, t_hi: f64, order: u32) -> Result<Self> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::domain(format!(
                "ramp thresholds must satisfy 0 < t_lo < t_hi, got ({t_lo}, {t_hi})"
            )));
        }
        if order < 1 {
            return Err(Error::domain("ramp order must be at least 1"));
        }
        Ok(Self { t_lo, t_hi, order })
    }

    /// The 2/3–4/3 ramp of default order.
    pub fn standard() -> Self {
        Self::new(2.0 / 3.0, 4.0 / 3.0, DEFAULT_RAMP_ORDER).expect("standard ramp is valid")
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Evaluate at a quasi-norm value `r ≥ 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("ramp argument must be non-negative, got {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        if r <= self.t_lo {
            1.0
        } else if r >= self.t_hi {
            0.0
        } else {
            1.0 - smoothstep(self.order, (r - self.t_lo) / (self.t_hi - self.t_lo))
        }
    }
}

/// One branch of a hybrid regulation function.
#[derive(Clone)]
pub enum RadiusRule {
    /// `coeff · |ξ|_a^{exponent}` — radial in the quasi-norm.
    Power { coeff: f64, exponent: f64 },
    /// Arbitrary positive evaluator; validated against the growth envelope
    /// on the working annulus at construction time.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for RadiusRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadiusRule::Power { coeff, exponent } => {
                write!(f, "Power {{ coeff: {coeff}, exponent: {exponent} }}")
            }
            RadiusRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl RadiusRule {
    fn eval(&self, xi: &[f64], norm: f64) -> f64 {
        match self {
            RadiusRule::Power { coeff, exponent } => coeff * norm.powf(*exponent),
            RadiusRule::Custom(f) => f(xi),
        }
    }

    fn is_radial(&self) -> bool {
        matches!(self, RadiusRule::Power { .. })
    }
}

/// Fitted growth-envelope constants: `c0 |ξ|_a^r ≤ h₁ ≤ c1 |ξ|_a` and
/// `c2 ≤ h₂ ≤ c3 |ξ|_a` on the working annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r: f64,
}

/// The blended radius rule `h̃ = ρ h₁ + (1−ρ) h₂`.
#[derive(Debug, Clone)]
pub struct HybridRegulation {
    ctx: QuasiNormContext,
    ramp: RampFunction,
    h1: RadiusRule,
    h2: RadiusRule,
    /// Set when built by [`alpha_regulation`]; enables serialization.
    alpha: Option<f64>,
    working_annulus: (f64, f64),
    envelope: EnvelopeConstants,
}

/// Serialized form of an α-family regulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegulationRepr {
    Alpha { alpha: f64, ramp: RampFunction },
}

const DEFAULT_WORKING_ANNULUS: (f64, f64) = (0.0009765625, 1024.0);
const ENVELOPE_PROBES: usize = 512;

/// The α-modulation radius rule `h₁ = |ξ|_a^{2−α}`, `h₂ = |ξ|_a^α` with the
/// standard ramp. `α = 1` collapses both branches to `|ξ|_a` (the dyadic
/// case); `α = 0` gives unit balls at high frequency.
pub fn alpha_regulation(ctx: &QuasiNormContext, alpha: f64) -> Result<HybridRegulation> {
    HybridRegulation::alpha_family(ctx, alpha, RampFunction::standard())
}

impl HybridRegulation {
    pub fn alpha_family(ctx: &QuasiNormContext, alpha: f64, ramp: RampFunction) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let h1 = RadiusRule::Power { coeff: 1.0, exponent: 2.0 - alpha };
        let h2 = RadiusRule::Power { coeff: 1.0, exponent: alpha };
        let mut reg = Self::assemble(ctx.clone(), ramp, h1, h2, DEFAULT_WORKING_ANNULUS)?;
        reg.alpha = Some(alpha);
        Ok(reg)
    }

    /// Builds a regulation from explicit branch rules and validates the
    /// growth envelopes on `working_annulus` (for power rules the exponent
    /// ranges are checked directly; custom rules are sampled).
    pub fn new(
        ctx: &QuasiNormContext,
        ramp: RampFunction,
        h1: RadiusRule,
        h2: RadiusRule,
        working_annulus: (f64, f64),
    ) -> Result<Self> {
        Self::assemble(ctx.clone(), ramp, h1, h2, working_annulus)
    }

    fn assemble(
        ctx: QuasiNormContext,
        ramp: RampFunction,
        h1: RadiusRule,
        h2: RadiusRule,
        working_annulus: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = working_annulus;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::domain("working annulus must satisfy 0 < lo < hi"));
        }
        if let RadiusRule::Power { coeff, exponent } = h1 {
            if !(coeff > 0.0) {
                return Err(Error::domain("h1 coefficient must be positive"));
            }
            if exponent < 1.0 {
                return Err(Error::domain(format!(
                    "h1 exponent must be at least 1, got {exponent}"
                )));
            }
        }
        if let RadiusRule::Power { coeff, exponent } = h2 {
            if !(coeff > 0.0) {
                return Err(Error::domain("h2 coefficient must be positive"));
            }
            if !(0.0..=1.0).contains(&exponent) {
                return Err(Error::domain(format!(
                    "h2 exponent must lie in [0, 1], got {exponent}"
                )));
            }
        }
        let mut reg = Self {
            ctx,
            ramp,
            h1,
            h2,
            alpha: None,
            working_annulus,
            envelope: EnvelopeConstants { c0: 0.0, c1: 0.0, c2: 0.0, c3: 0.0, r: 1.0 },
        };
        reg.envelope = reg.fit_envelope()?;
        Ok(reg)
    }

    /// Fits the envelope constants on the working annulus and rejects rules
    /// that violate positivity or the required shapes.
    fn fit_envelope(&self) -> Result<EnvelopeConstants> {
        let (lo, hi) = self.working_annulus;
        let r_exp = match self.h1 {
            RadiusRule::Power { exponent, .. } => exponent,
            // Custom low-frequency rules are checked against linear decay.
            RadiusRule::Custom(_) => 1.0,
        };
        let mut c0 = f64::INFINITY;
        let mut c1 = 0.0_f64;
        let mut c2 = f64::INFINITY;
        let mut c3 = 0.0_f64;
        let d = self.ctx.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for i in 0..ENVELOPE_PROBES {
            let t = (lo.ln() + (hi.ln() - lo.ln()) * (i as f64 + 0.5) / ENVELOPE_PROBES as f64)
                .exp();
            let u = sample_direction(&mut rng, d);
            let xi = self.ctx.point_with_norm(t, &u);
            let v1 = self.h1.eval(&xi, t);
            let v2 = self.h2.eval(&xi, t);
            if !(v1 > 0.0 && v1.is_finite() && v2 > 0.0 && v2.is_finite()) {
                return Err(Error::domain(
                    "regulation branches must be positive and finite on the working annulus",
                ));
            }
            c0 = c0.min(v1 / t.powf(r_exp));
            c1 = c1.max(v1 / t);
            c2 = c2.min(v2);
            c3 = c3.max(v2 / t);
        }
        Ok(EnvelopeConstants { c0, c1, c2, c3, r: r_exp })
    }

    pub fn ctx(&self) -> &QuasiNormContext {
        &self.ctx
    }

    pub fn ramp(&self) -> &RampFunction {
        &self.ramp
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn envelope(&self) -> EnvelopeConstants {
        self.envelope
    }

    pub fn working_annulus(&self) -> (f64, f64) {
        self.working_annulus
    }

    /// `h̃(ξ)` for `ξ ≠ 0`.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        let norm = self.ctx.aniso_norm(xi)?;
        if norm == 0.0 {
            return Err(Error::domain("hybrid regulation is undefined at the origin"));
        }
        Ok(self.eval_with_norm(xi, norm))
    }

    /// `h̃(ξ)` when `|ξ|_a` is already known.
    pub fn eval_with_norm(&self, xi: &[f64], norm: f64) -> f64 {
        let rho = self.ramp.eval_unchecked(norm);
        if rho == 1.0 {
            self.h1.eval(xi, norm)
        } else if rho == 0.0 {
            self.h2.eval(xi, norm)
        } else {
            rho * self.h1.eval(xi, norm) + (1.0 - rho) * self.h2.eval(xi, norm)
        }
    }

    /// Radial evaluation `h̃(t)` — exact for power rules, which depend on the
    /// point only through its quasi-norm.
    pub fn eval_radial(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain("radial evaluation needs a positive quasi-norm"));
        }
        if !self.is_radial() {
            return Err(Error::domain("regulation has custom branches; evaluate at a point"));
        }
        Ok(self.eval_with_norm(&[], t))
    }

    pub fn is_radial(&self) -> bool {
        self.h1.is_radial() && self.h2.is_radial()
    }

    /// Minimum of `h̃` over the shell `{|ξ|_a = t}`, by direction sampling
    /// for custom rules and exactly for radial ones.
    pub fn shell_min(&self, t: f64, dirs: usize) -> Result<f64> {
        if self.is_radial() {
            return self.eval_radial(t);
        }
        let d = self.ctx.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xd1f5);
        let mut best = f64::INFINITY;
        for _ in 0..dirs.max(4) {
            let u = sample_direction(&mut rng, d);
            let xi = self.ctx.point_with_norm(t, &u);
            best = best.min(self.eval_with_norm(&xi, t));
        }
        Ok(best)
    }

    /// Serializable description; only the α family round-trips.
    pub fn repr(&self) -> Result<RegulationRepr> {
        match self.alpha {
            Some(alpha) => Ok(RegulationRepr::Alpha { alpha, ramp: self.ramp.clone() }),
            None => Err(Error::domain("only alpha-family regulations serialize")),
        }
    }

    pub fn from_repr(ctx: &QuasiNormContext, repr: &RegulationRepr) -> Result<Self> {
        match repr {
            RegulationRepr::Alpha { alpha, ramp } => {
                Self::alpha_family(ctx, *alpha, ramp.clone())
            }
        }
    }
}

/// Outcome of the empirical moderateness probe: the largest observed radius
/// ratio over pairs with `d(ξ, ζ) ≤ δ₀ h̃(ξ)`, and the pair achieving it.
#[derive(Debug, Clone, Serialize)]
pub struct ModerateReport {
    pub r_emp: f64,
    pub worst_pair: (Vec<f64>, Vec<f64>),
}

/// Samples pairs at quasi-distance at most `δ₀ h̃(ξ)` inside the annulus and
/// reports `R_emp = max(h̃(ξ)/h̃(ζ), h̃(ζ)/h̃(ξ))`. The extreme ratios live on
/// the boundary `d(ξ, ζ) = δ₀ h̃(ξ)`, so each draw probes several directions
/// at the boundary distance plus one interior point. Deterministic per seed.
pub fn check_moderate(
    h: &HybridRegulation,
    delta0: f64,
    n_samples: usize,
    annulus: (f64, f64),
    seed: u64,
) -> Result<ModerateReport> {
    let (r_min, r_max) = annulus;
    if !(r_min > 0.0) || r_min >= r_max {
        return Err(Error::domain(format!(
            "annulus must satisfy 0 < r_min < r_max, got ({r_min}, {r_max})"
        )));
    }
    if !(delta0 > 0.0) {
        return Err(Error::domain("delta0 must be positive"));
    }
    let ctx = h.ctx();
    let d = ctx.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..n_samples {
        let t = log_uniform(&mut rng, r_min, r_max);
        let u = sample_direction(&mut rng, d);
        let xi = ctx.point_with_norm(t, &u);
        let h_xi = h.eval_with_norm(&xi, t);
        for probe in 0..4 {
            let s = if probe == 0 {
                rng.gen::<f64>() * delta0 * h_xi
            } else {
                delta0 * h_xi
            };
            let v = sample_direction(&mut rng, d);
            let offset = ctx.point_with_norm(s.max(1e-300), &v);
            let zeta: Vec<f64> = xi.iter().zip(&offset).map(|(x, o)| x + o).collect();
            let t_zeta = ctx.aniso_norm(&zeta)?;
            if t_zeta == 0.0 {
                continue;
            }
            let h_zeta = h.eval_with_norm(&zeta, t_zeta);
            let ratio = (h_xi / h_zeta).max(h_zeta / h_xi);
            if ratio > worst {
                worst = ratio;
                worst_pair = (xi.clone(), zeta);
            }
        }
    }
    Ok(ModerateReport { r_emp: worst, worst_pair })
}
