//! Anisotropic frequency-domain tilings and the analysis machinery built on them.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`anorm`] — the anisotropic quasi-norm `|·|_a` induced by a dilation
//!    group `D_a(t) = diag(t^{a_1}, …, t^{a_d})`, plus an empirical
//!    quasi-triangle constant.
//! 2. [`regulation`] — radius rules `h̃ = ρ·h₁ + (1−ρ)·h₂` that blend a
//!    low-frequency decay rule with a high-frequency growth rule, including
//!    the α-modulation family.
//! 3. [`covering`] — structured coverings of a truncated annulus in
//!    `ℝ^d \ {0}`: greedy maximal ball packings graded by a regulation
//!    function, and the explicit anisotropic dyadic (Besov) box covering.
//! 4. [`bapu`] — bounded admissible partitions of unity subordinate to a
//!    covering, in both the normalized (`ψ_j`) and square-root (`φ_j`) forms.
//! 5. [`frame`] — the tight frame of modulated, dilated atoms with
//!    `η̂_{n,j} = φ_j · e_{n,j}`; FFT-based analysis, synthesis, and Parseval
//!    diagnostics.
//! 6. [`spaces`] — weighted `ℓ_q(L_p)` decomposition norms, the equivalent
//!    coefficient-space norms, thresholding, and reconstruction error.
//! 7. [`testfn`] — a registry of band-limited test functions with exact
//!    support metadata and independently computed `L₂` norms.

pub mod anorm;
pub mod bapu;
pub mod covering;
mod error;
pub mod fft;
pub mod frame;
pub mod quad;
pub mod regulation;
pub mod spaces;
pub mod testfn;

pub use anorm::{Anisotropy, QuasiNormContext};
pub use bapu::{Bapu, BumpFunction, MultiplierMode, PouReport};
pub use covering::{
    AdmissibilityReport, AffineMap, BesovIndex, Covering, Patch, PatchClass, PatchShape,
};
pub use error::{Error, Result};
pub use frame::{CoefficientSet, FrameGeometry, SpectralFunction};
pub use regulation::{HybridRegulation, ModerateReport, RampFunction};
pub use spaces::{NormReport, SpaceParams, ThresholdRule};
pub use testfn::TestFunctionSpec;
