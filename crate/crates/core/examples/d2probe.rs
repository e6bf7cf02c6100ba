//! Scratch sizing probe for two-dimensional coverings.

use std::sync::Arc;
use std::time::Instant;

use freqtile_core::covering::{build_covering, check_admissible};
use freqtile_core::frame::{analyze, FrameGeometry};
use freqtile_core::regulation::alpha_regulation;
use freqtile_core::testfn::{registry_instantiate, TestFunctionName, TestFunctionSpec};
use freqtile_core::{Anisotropy, Bapu, QuasiNormContext};

fn main() {
    let mut ctx =
        QuasiNormContext::with_default_tol(Anisotropy::new(vec![0.5, 1.5]).unwrap());
    let t = Instant::now();
    let k = ctx.estimate_k(100_000, 1).unwrap();
    println!("K_est = {k:.4} in {:?}", t.elapsed());

    let h = alpha_regulation(&ctx, 0.5).unwrap();
    let delta = 0.8 / (2.0 * k);
    println!("delta = {delta:.4}");
    let t = Instant::now();
    let cov = build_covering(&h, delta, 0.45, (2f64.powi(-6), 2f64.powi(6)), 32).unwrap();
    println!(
        "covering: {} patches, cover_scale {}, built in {:?}",
        cov.len(),
        cov.cover_scale(),
        t.elapsed()
    );

    let t = Instant::now();
    let rep = check_admissible(&cov, 10_000, 2).unwrap();
    println!(
        "admissible: covered {} overlap {} origin {:.4} transition {:.3} in {:?}",
        rep.covered_fraction,
        rep.max_overlap,
        rep.min_dist_to_origin,
        rep.max_transition_norm,
        t.elapsed()
    );

    let b = Bapu::new(Arc::new(cov), 3).unwrap();
    let t = Instant::now();
    let pou = b.verify_pou(10_000, 3).unwrap();
    println!(
        "pou: psi {:.3e} phi2 {:.3e} in {:?}",
        pou.max_psi_residual,
        pou.max_phi2_residual,
        t.elapsed()
    );

    let spec = TestFunctionSpec::new(TestFunctionName::GaussbumpAnnular)
        .with_scalar("center", 4.0)
        .with_scalar("width", 0.8);
    let t = Instant::now();
    let f = registry_instantiate(b.ctx(), &spec).unwrap();
    println!("testfn oracle {:.6} in {:?}", f.l2_norm_oracle().unwrap(), t.elapsed());

    let g = FrameGeometry::for_covering(b.covering(), 16, 64).unwrap();
    let t = Instant::now();
    let c = analyze(&b, &g, &f).unwrap();
    println!(
        "analyze: {} blocks ({} skipped) in {:?}",
        c.blocks().len(),
        c.skipped().len(),
        t.elapsed()
    );
    let ratio = freqtile_core::frame::parseval_check(&c, &f).unwrap();
    println!("parseval ratio − 1 = {:+.3e}", ratio - 1.0);
}
