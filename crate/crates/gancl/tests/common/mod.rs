//! Shared helpers for gradient checks: central finite differences as an
//! independent oracle for every analytic gradient in the crate.

#![allow(dead_code)]

/// Central-difference gradient of `f` at `x` with step `h` per coordinate.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// Asserts `|a_i − n_i| ≤ rel · max(|a_i|, |n_i|) + abs` for every component.
pub fn assert_grad_close(analytic: &[f64], numeric: &[f64], rel: f64, abs: f64, context: &str) {
    assert_eq!(analytic.len(), numeric.len(), "{context}: length mismatch");
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = rel * a.abs().max(n.abs()) + abs;
        assert!(
            (a - n).abs() <= tol,
            "{context}: component {i} analytic {a} vs numeric {n} (tol {tol})"
        );
    }
}

/// Largest relative mismatch between two gradients, for diagnostics.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(abs_floor))
        .fold(0.0, f64::max)
}
