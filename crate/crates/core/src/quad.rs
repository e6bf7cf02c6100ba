//! Tensor midpoint quadrature over coordinate boxes.
//!
//! Used for the independent `L₂` oracles and the Plancherel-side norm
//! computations; deliberately separate from the FFT quadrature path so the
//! two can cross-check each other.

use rayon::prelude::*;

/// Midpoint rule over the box `[lo, hi]` with `counts[i]` cells per axis.
/// Rows are evaluated in parallel and then reduced in a fixed order.
pub fn box_midpoint<F>(f: F, lo: &[f64], hi: &[f64], counts: &[usize]) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = lo.len();
    assert_eq!(hi.len(), d);
    assert_eq!(counts.len(), d);
    assert!(counts.iter().all(|&c| c > 0));
    let steps: Vec<f64> =
        (0..d).map(|i| (hi[i] - lo[i]) / counts[i] as f64).collect();
    let cell: f64 = steps.iter().product();
    match d {
        1 => {
            let rows: Vec<f64> = (0..counts[0])
                .into_par_iter()
                .map(|i| f(&[lo[0] + (i as f64 + 0.5) * steps[0]]))
                .collect();
            rows.iter().sum::<f64>() * cell
        }
        2 => {
            let rows: Vec<f64> = (0..counts[0])
                .into_par_iter()
                .map(|i| {
                    let x = lo[0] + (i as f64 + 0.5) * steps[0];
                    let mut acc = 0.0;
                    for j in 0..counts[1] {
                        let y = lo[1] + (j as f64 + 0.5) * steps[1];
                        acc += f(&[x, y]);
                    }
                    acc
                })
                .collect();
            rows.iter().sum::<f64>() * cell
        }
        _ => {
            // General-dimension fallback: odometer over cells.
            let mut idx = vec![0usize; d];
            let mut point = vec![0.0; d];
            let mut acc = 0.0;
            loop {
                for i in 0..d {
                    point[i] = lo[i] + (idx[i] as f64 + 0.5) * steps[i];
                }
                acc += f(&point);
                let mut carry = d;
                for i in (0..d).rev() {
                    idx[i] += 1;
                    if idx[i] < counts[i] {
                        carry = i;
                        break;
                    }
                    idx[i] = 0;
                }
                if carry == d {
                    break;
                }
            }
            acc * cell
        }
    }
}

/// Midpoint quadrature refined until two successive grids agree to `rel_tol`
/// (relative), starting from `base` cells per axis, at most `max_refines`
/// refinements by 3/2.
pub fn box_midpoint_adaptive<F>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    base: usize,
    rel_tol: f64,
    max_refines: usize,
) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = lo.len();
    let mut counts: Vec<usize> = vec![base; d];
    let mut value = box_midpoint(&f, lo, hi, &counts);
    for _ in 0..max_refines {
        for c in &mut counts {
            *c = (*c * 3) / 2;
        }
        let refined = box_midpoint(&f, lo, hi, &counts);
        let scale = refined.abs().max(1e-300);
        let done = (refined - value).abs() <= rel_tol * scale;
        value = refined;
        if done {
            break;
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials() {
        // ∫₀¹ x² dx = 1/3 (midpoint converges at h²).
        let v = box_midpoint(|x| x[0] * x[0], &[0.0], &[1.0], &[2000]);
        assert!((v - 1.0 / 3.0).abs() < 1e-7);
        // ∫∫ xy over [0,1]² = 1/4.
        let v = box_midpoint(|x| x[0] * x[1], &[0.0, 0.0], &[1.0, 1.0], &[200, 200]);
        assert!((v - 0.25).abs() < 1e-9);
    }

    #[test]
    fn adaptive_refines_to_tolerance() {
        let v = box_midpoint_adaptive(
            |x| (x[0] * std::f64::consts::PI).sin(),
            &[0.0],
            &[1.0],
            256,
            1e-7,
            8,
        );
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 5e-7);
    }
}
