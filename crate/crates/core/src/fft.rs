//! Thin d-dimensional DFT wrapper over rustfft.
//!
//! Transforms are unnormalized: forward uses `e^{-2πi k·m/M}`, inverse
//! `e^{+2πi k·m/M}`. Callers apply quadrature weights themselves.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place DFT along every axis of a row-major array with the given shape.
pub fn dft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "data length must match shape");
    for (axis, &n) in dims.iter().enumerate() {
        if n <= 1 {
            continue;
        }
        let fft = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            if inverse {
                p.plan_fft_inverse(n)
            } else {
                p.plan_fft_forward(n)
            }
        });
        let stride: usize = dims[axis + 1..].iter().product();
        let block = stride * n;
        let mut lane = vec![Complex64::default(); n];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                if stride == 1 {
                    fft.process(&mut data[base..base + n]);
                } else {
                    for k in 0..n {
                        lane[k] = data[base + k * stride];
                    }
                    fft.process(&mut lane);
                    for k in 0..n {
                        data[base + k * stride] = lane[k];
                    }
                }
            }
        }
    }
}

/// Row-major offset of a signed multi-index `n ∈ [−n_max, n_max]^d`.
pub fn signed_index_offset(n: &[i64], n_max: i64) -> usize {
    let side = (2 * n_max + 1) as usize;
    let mut off = 0usize;
    for &ni in n {
        debug_assert!(ni.abs() <= n_max);
        off = off * side + (ni + n_max) as usize;
    }
    off
}

/// Iterator over all signed multi-indices `[−n_max, n_max]^d` in row-major
/// order (matching [`signed_index_offset`]).
pub fn signed_indices(dim: usize, n_max: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * n_max + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total).map(move |mut flat| {
        let mut out = vec![0i64; dim];
        for i in (0..dim).rev() {
            out[i] = (flat % side) as i64 - n_max;
            flat /= side;
        }
        out
    })
}
