//! The negative-sampling objective for one (emoji, word) pair and its
//! gradient with respect to the emoji vector. Word vectors are constants.

use super::{axpy, dot};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `ln σ(w⁺·e) + Σ ln σ(−w⁻·e)`; larger is better.
pub fn sgns_objective(e: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(positive, e))
        + negatives
            .iter()
            .map(|w| log_sigmoid(-dot(w, e)))
            .sum::<f64>()
}

/// Ascent direction of [`sgns_objective`] with respect to `e`:
/// `(1 − σ(w⁺·e))·w⁺ − Σ σ(w⁻·e)·w⁻`.
pub fn sgns_gradient(e: &[f64], positive: &[f64], negatives: &[&[f64]]) -> Vec<f64> {
    let mut grad = vec![0.0; e.len()];
    accumulate_gradient(e, positive, negatives.iter().copied(), &mut grad);
    grad
}

pub(crate) fn accumulate_gradient<'a>(
    e: &[f64],
    positive: &[f64],
    negatives: impl Iterator<Item = &'a [f64]>,
    grad: &mut [f64],
) {
    axpy(1.0 - sigmoid(dot(positive, e)), positive, grad);
    for w in negatives {
        axpy(-sigmoid(dot(w, e)), w, grad);
    }
}

/// Objective with every row of `matrix` (row-major, `e.len()` columns) as a
/// negative, the literal full-vocabulary form.
pub fn sgns_full_objective(e: &[f64], positive: &[f64], matrix: &[f64]) -> f64 {
    let rows: Vec<&[f64]> = matrix.chunks_exact(e.len()).collect();
    sgns_objective(e, positive, &rows)
}

pub fn sgns_full_gradient(e: &[f64], positive: &[f64], matrix: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; e.len()];
    accumulate_gradient(e, positive, matrix.chunks_exact(e.len()), &mut grad);
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!(close(log_sigmoid(-800.0), -800.0, 1e-9));
        assert_eq!(log_sigmoid(800.0), -0.0);
    }

    #[test]
    fn objective_examples() {
        let e = [0.0, 0.0];
        let w = [1.0, 0.0];
        let n = [0.0, 1.0];
        assert!(close(sgns_objective(&e, &w, &[&n]), 2.0 * 0.5f64.ln(), 1e-12));
        assert!(close(2.0 * 0.5f64.ln(), -1.3863, 1e-4));

        // w·e = 1, negative with w_k·e = -1
        let e = [1.0, 0.0];
        let pos = [1.0, 0.0];
        let neg = [-1.0, 0.0];
        // ln σ(1) = -0.31326 by hand
        assert!(close(log_sigmoid(1.0), -0.31326, 1e-5));
        assert!(close(sgns_objective(&e, &pos, &[&neg]), -0.6266, 1e-4));

        let e = [1e6];
        assert!(close(sgns_objective(&e, &[1.0], &[&[-1.0]]), 0.0, 1e-12));
        assert!(sgns_objective(&e, &[1.0], &[&[-1.0]]) <= 0.0);
    }

    #[test]
    fn gradient_examples() {
        let g = sgns_gradient(&[0.0, 0.0], &[1.0, 0.0], &[&[0.0, 1.0]]);
        assert_eq!(g, vec![0.5, -0.5]);
        let g = sgns_gradient(&[100.0, 0.0], &[1.0, 0.0], &[]);
        assert!(g.iter().all(|x| x.abs() < 1e-40));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from(42, &[]);
        let k = 8;
        for _ in 0..20 {
            let mut v = || (0..k).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let e = v();
            let pos = v();
            let negs: Vec<Vec<f64>> = (0..3).map(|_| v()).collect();
            let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = sgns_gradient(&e, &pos, &refs);
            let h = 1e-5;
            for i in 0..k {
                let mut p = e.clone();
                p[i] += h;
                let mut m = e.clone();
                m[i] -= h;
                let num = (sgns_objective(&p, &pos, &refs) - sgns_objective(&m, &pos, &refs))
                    / (2.0 * h);
                assert!(close(num, g[i], 1e-7), "{num} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn full_forms_agree_with_explicit_lists() {
        let matrix = [1.0, 0.0, 0.0, 1.0, 0.5, 0.5];
        let e = [0.3, -0.2];
        let pos = [1.0, 0.0];
        let rows: Vec<&[f64]> = matrix.chunks(2).collect();
        assert_eq!(
            sgns_full_objective(&e, &pos, &matrix),
            sgns_objective(&e, &pos, &rows)
        );
        assert_eq!(
            sgns_full_gradient(&e, &pos, &matrix),
            sgns_gradient(&e, &pos, &rows)
        );
    }
}
