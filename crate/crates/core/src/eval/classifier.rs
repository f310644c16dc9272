use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::embedding::dot;
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Hinge-loss weight against the L2 penalty.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            c: 1.0,
            epochs: 10,
            seed: 1,
        }
    }
}

/// Decision function `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Linear SVM by stochastic subgradient descent (Pegasos).
///
/// Minimises `λ/2 |w|² + mean hinge` with `λ = 1 / (C n)`, the per-example
/// form of `½|w|² + C Σ hinge`. The bias is a constant feature, so it is
/// regularised too. Returns the average of the iterates over the second half
/// of training, which is far less noisy than the last one.
pub fn train_linear_classifier(
    xs: &[Vec<f64>],
    ys: &[i8],
    config: &ClassifierConfig,
) -> Result<LinearModel, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if !(ys.contains(&1) && ys.contains(&-1)) {
        return Err(EvalError::SingleClass);
    }
    if config.c.is_nan() || config.c <= 0.0 || config.epochs == 0 {
        return Err(EvalError::InvalidConfig(
            "classifier needs c > 0 and at least one epoch".into(),
        ));
    }
    let n = xs.len();
    let dim = xs[0].len();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut averaged = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(config.seed, &[0x5347_4431]);
    let total = (config.epochs * n) as u64;
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let x = &xs[i];
            let y = f64::from(ys[i]);
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * (dot(&w[..dim], x) + w[dim]);
            let shrink = 1.0 - eta * lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (v, xi) in w[..dim].iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                w[dim] += eta * y;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                for v in w.iter_mut() {
                    *v *= s;
                }
            }
            if 2 * t > total {
                averaged += 1;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += v;
                }
            }
        }
    }
    let k = averaged.max(1) as f64;
    let bias = avg[dim] / k;
    avg.truncate(dim);
    for a in avg.iter_mut() {
        *a /= k;
    }
    Ok(LinearModel { weights: avg, bias })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_positive: f64,
}

/// Accuracy and F1 of the `+1` class; F1 is 0 when precision or recall is
/// undefined.
pub fn compute_metrics(predictions: &[i8], labels: &[i8]) -> Result<Metrics, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(EvalError::TooFewExamples("no predictions to score".into()));
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            correct += 1;
        }
        match (p == 1, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let accuracy = correct as f64 / labels.len() as f64;
    let f1_positive = if tp == 0 {
        0.0
    } else {
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        2.0 * p * r / (p + r)
    };
    Ok(Metrics {
        accuracy,
        f1_positive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub f1_positive: f64,
}

/// Stratified, seeded fold index for every example.
pub fn stratified_folds(ys: &[i8], folds: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if folds < 2 {
        return Err(EvalError::InvalidConfig("need at least 2 folds".into()));
    }
    let mut assignment = vec![0; ys.len()];
    let mut rng = rng_from(seed, &[0x464f_4c44]);
    let mut offset = 0;
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == class).collect();
        if idx.len() < folds {
            return Err(EvalError::TooFewExamples(format!(
                "class {class:+} has {} examples for {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = (k + offset) % folds;
        }
        // Continue the round robin so fold sizes stay balanced overall.
        offset = (offset + ys.iter().filter(|&&y| y == class).count()) % folds;
    }
    Ok(assignment)
}

/// Train on all folds but one and score the held-out fold, for every fold.
pub fn cross_validate(
    xs: &[Vec<f64>],
    ys: &[i8],
    folds: usize,
    seed: u64,
    config: &ClassifierConfig,
) -> Result<Vec<FoldMetrics>, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    let assignment = stratified_folds(ys, folds, seed)?;
    (0..folds)
        .map(|f| {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut test = Vec::new();
            for (i, &a) in assignment.iter().enumerate() {
                if a == f {
                    test.push(i);
                } else {
                    train_x.push(xs[i].clone());
                    train_y.push(ys[i]);
                }
            }
            let cfg = ClassifierConfig {
                seed: derive_seed(config.seed, &[seed, f as u64]),
                ..*config
            };
            let model = train_linear_classifier(&train_x, &train_y, &cfg)?;
            let preds: Vec<i8> = test.iter().map(|&i| model.predict(&xs[i])).collect();
            let labels: Vec<i8> = test.iter().map(|&i| ys[i]).collect();
            let m = compute_metrics(&preds, &labels)?;
            Ok(FoldMetrics {
                fold: f,
                accuracy: m.accuracy,
                f1_positive: m.f1_positive,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn accuracy(model: &LinearModel, xs: &[Vec<f64>], ys: &[i8]) -> f64 {
        let ok = xs.iter().zip(ys).filter(|(x, &y)| model.predict(x) == y).count();
        ok as f64 / ys.len() as f64
    }

    #[test]
    fn two_separable_points() {
        let xs = vec![vec![1.0, 0.5], vec![-1.0, -0.5]];
        let ys = vec![1, -1];
        let m = train_linear_classifier(&xs, &ys, &ClassifierConfig::default()).unwrap();
        assert_eq!(accuracy(&m, &xs, &ys), 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_linear_classifier(&xs, &[1, 1], &ClassifierConfig::default()),
            Err(EvalError::SingleClass)
        ));
    }

    #[test]
    fn xor_is_not_separable() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let ys = vec![1, 1, -1, -1];
        let m = train_linear_classifier(&xs, &ys, &ClassifierConfig::default()).unwrap();
        assert!(accuracy(&m, &xs, &ys) <= 0.75);
    }

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&[1, -1, 1], &[1, -1, 1]).unwrap();
        assert_eq!((m.accuracy, m.f1_positive), (1.0, 1.0));
        let m = compute_metrics(&[-1, -1, -1, -1], &[1, 1, -1, -1]).unwrap();
        assert_eq!((m.accuracy, m.f1_positive), (0.5, 0.0));
        // TP=2, FP=1, FN=1
        let m = compute_metrics(&[1, 1, 1, -1, -1], &[1, 1, -1, 1, -1]).unwrap();
        assert!((m.f1_positive - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(compute_metrics(&[1], &[1, 1]), Err(EvalError::LengthMismatch(1, 2))));
    }

    fn blobs(n: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            let c = f64::from(y) * gap;
            xs.push(vec![c + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)]);
            ys.push(y);
        }
        (xs, ys)
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let (xs, ys) = blobs(200, 1.0, 3);
        let folds = cross_validate(&xs, &ys, 5, 9, &ClassifierConfig::default()).unwrap();
        assert_eq!(folds.len(), 5);
        for f in folds {
            assert_eq!((f.accuracy, f.f1_positive), (1.0, 1.0));
        }
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        let (xs, mut ys) = blobs(400, 1.0, 4);
        ys.shuffle(&mut Rng::seed_from_u64(5));
        let folds = cross_validate(&xs, &ys, 5, 9, &ClassifierConfig::default()).unwrap();
        let mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / 5.0;
        assert!((mean - 0.5).abs() <= 0.1, "{mean}");
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let (xs, ys) = blobs(100, 0.2, 6);
        let cfg = ClassifierConfig::default();
        assert_eq!(
            cross_validate(&xs, &ys, 5, 1, &cfg).unwrap(),
            cross_validate(&xs, &ys, 5, 1, &cfg).unwrap()
        );
    }

    #[test]
    fn too_few_examples() {
        let xs = vec![vec![0.0]; 6];
        let ys = vec![1, 1, 1, 1, 1, -1];
        assert!(matches!(
            cross_validate(&xs, &ys, 5, 1, &ClassifierConfig::default()),
            Err(EvalError::TooFewExamples(_))
        ));
    }

    proptest! {
        #[test]
        fn folds_are_balanced_partitions(
            ys in prop::collection::vec(prop::bool::ANY, 10..200),
            seed in any::<u64>(),
        ) {
            let ys: Vec<i8> = ys.into_iter().map(|b| if b { 1 } else { -1 }).collect();
            let pos = ys.iter().filter(|&&y| y == 1).count();
            prop_assume!(pos >= 5 && ys.len() - pos >= 5);
            let a = stratified_folds(&ys, 5, seed).unwrap();
            for class in [1i8, -1] {
                let total = ys.iter().filter(|&&y| y == class).count() as f64;
                for f in 0..5 {
                    let in_fold = (0..ys.len()).filter(|&i| a[i] == f && ys[i] == class).count() as f64;
                    prop_assert!((in_fold - total / 5.0).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn metrics_match_brute_force(
            pairs in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..100),
        ) {
            let preds: Vec<i8> = pairs.iter().map(|p| if p.0 { 1 } else { -1 }).collect();
            let labels: Vec<i8> = pairs.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
            let m = compute_metrics(&preds, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.accuracy));
            prop_assert!((0.0..=1.0).contains(&m.f1_positive));
        }
    }
}
