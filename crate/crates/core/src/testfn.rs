//! Registry of band-limited test functions.
//!
//! All families are smooth annular bumps in `|·|_a` (compact plateau
//! envelopes, not true Gaussians), so the declared support is exact and the
//! `L₂` norm can be computed by dense midpoint quadrature at instantiation —
//! the independent oracle consumed by the Parseval and reconstruction
//! checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anorm::QuasiNormContext;
use crate::error::{Error, Result};
use crate::frame::SpectralFunction;
use crate::quad::box_midpoint_adaptive;
use crate::regulation::smoothstep;

/// Named family of a registered test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionName {
    /// One annular plateau bump `A · env((|ξ|_a − center)/width)`.
    GaussbumpAnnular,
    /// Sum of several annular bumps (`centers`, `widths`, `amplitudes`).
    MultiBump,
    /// Annular bump with a spatial shift: `A · env(·) · e^{i ξ·shift}`.
    AtomLike,
}

/// Scalar or vector parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl ParamValue {
    fn scalar(&self) -> Option<f64> {
        match self {
            ParamValue::Scalar(v) => Some(*v),
            ParamValue::List(l) if l.len() == 1 => Some(l[0]),
            _ => None,
        }
    }

    fn list(&self) -> Vec<f64> {
        match self {
            ParamValue::Scalar(v) => vec![*v],
            ParamValue::List(l) => l.clone(),
        }
    }
}

/// A test-function request: family name plus named parameters (centers and
/// widths in `|·|_a` units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub name: TestFunctionName,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl TestFunctionSpec {
    pub fn new(name: TestFunctionName) -> Self {
        Self { name, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_scalar(self, key: &str, value: f64) -> Self {
        self.with(key, ParamValue::Scalar(value))
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .and_then(ParamValue::scalar)
            .ok_or_else(|| Error::domain(format!("missing scalar parameter `{key}`")))
    }

    fn optional(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .scalar()
                .ok_or_else(|| Error::domain(format!("parameter `{key}` must be scalar"))),
        }
    }
}

/// Plateau envelope: 1 on `[0, 1/2]`, `C⁴` descent to 0 at 1.
fn envelope(u: f64) -> f64 {
    let u = u.abs();
    if u >= 1.0 {
        0.0
    } else if u <= 0.5 {
        1.0
    } else {
        1.0 - smoothstep(4, (u - 0.5) * 2.0)
    }
}

struct BumpSet {
    centers: Vec<f64>,
    widths: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl BumpSet {
    fn support(&self) -> (f64, f64) {
        let lo = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, w)| c - w)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, w)| c + w)
            .fold(0.0, f64::max);
        (lo, hi)
    }
}

/// Builds the evaluator, exact support hint, and quadrature `L₂` oracle for
/// a registered test function.
pub fn registry_instantiate(
    ctx: &QuasiNormContext,
    spec: &TestFunctionSpec,
) -> Result<SpectralFunction> {
    let d = ctx.dim();
    let (bumps, shift) = match spec.name {
        TestFunctionName::GaussbumpAnnular => {
            let center = spec.require("center")?;
            let width = spec.require("width")?;
            let amplitude = spec.optional("amplitude", 1.0)?;
            (BumpSet { centers: vec![center], widths: vec![width], amplitudes: vec![amplitude] }, None)
        }
        TestFunctionName::MultiBump => {
            let centers = spec
                .params
                .get("centers")
                .map(ParamValue::list)
                .ok_or_else(|| Error::domain("multi_bump requires `centers`"))?;
            let widths = spec
                .params
                .get("widths")
                .map(ParamValue::list)
                .ok_or_else(|| Error::domain("multi_bump requires `widths`"))?;
            let amplitudes = spec
                .params
                .get("amplitudes")
                .map(ParamValue::list)
                .unwrap_or_else(|| vec![1.0; centers.len()]);
            if centers.len() != widths.len() || centers.len() != amplitudes.len() {
                return Err(Error::domain(
                    "multi_bump parameter lists must have equal lengths",
                ));
            }
            if centers.is_empty() {
                return Err(Error::domain("multi_bump needs at least one bump"));
            }
            (BumpSet { centers, widths, amplitudes }, None)
        }
        TestFunctionName::AtomLike => {
            let center = spec.require("center")?;
            let width = spec.require("width")?;
            let amplitude = spec.optional("amplitude", 1.0)?;
            let shift = spec
                .params
                .get("shift")
                .map(ParamValue::list)
                .unwrap_or_else(|| vec![0.0; d]);
            if shift.len() != d {
                return Err(Error::domain("`shift` must have one entry per dimension"));
            }
            (
                BumpSet { centers: vec![center], widths: vec![width], amplitudes: vec![amplitude] },
                Some(shift),
            )
        }
    };
    for (c, w) in bumps.centers.iter().zip(&bumps.widths) {
        if !(w > &0.0) {
            return Err(Error::domain("bump widths must be positive"));
        }
        if c - w <= 0.0 {
            return Err(Error::domain(
                "bump support must stay inside the punctured frequency space",
            ));
        }
    }
    let (s_lo, s_hi) = bumps.support();
    let cctx = ctx.clone();
    let eval = move |xi: &[f64]| -> Complex64 {
        // Fast exclusion through the ellipsoid membership functionals.
        if cctx.scaled_euclid(xi, s_hi) >= 1.0 || cctx.scaled_euclid(xi, s_lo) <= 1.0 {
            return Complex64::default();
        }
        let t = match cctx.aniso_norm(xi) {
            Ok(t) => t,
            Err(_) => return Complex64::default(),
        };
        let mut value = 0.0;
        for ((c, w), a) in
            bumps.centers.iter().zip(&bumps.widths).zip(&bumps.amplitudes)
        {
            value += a * envelope((t - c) / w);
        }
        match &shift {
            None => Complex64::new(value, 0.0),
            Some(x0) => {
                let phase: f64 = xi.iter().zip(x0).map(|(x, s)| x * s).sum();
                Complex64::from_polar(value, phase)
            }
        }
    };
    let f = SpectralFunction::new(d, Arc::new(eval)).with_support_hint(ctx, s_lo, s_hi)?;
    // Dense quadrature L₂ oracle over the coordinate bounding box.
    let a = ctx.aniso().exponents();
    let reach: Vec<f64> = a.iter().map(|&ai| s_hi.powf(ai)).collect();
    let lo: Vec<f64> = reach.iter().map(|r| -r).collect();
    let base = match d {
        1 => 32_768,
        2 => 640,
        _ => 96,
    };
    let ff = f.clone();
    let norm2 = box_midpoint_adaptive(
        move |xi: &[f64]| ff.eval(xi).norm_sqr(),
        &lo,
        &reach,
        base,
        1e-7,
        3,
    );
    f.with_l2_oracle(norm2.max(0.0).sqrt())
}
