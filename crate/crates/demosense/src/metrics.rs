//! Task metrics and the two corruption summaries.
//!
//! Label-correctness sensitivity is the slope of an ordinary least-squares
//! fit of performance `y` against the fraction of correctly labeled
//! demonstrations `s`: `y = beta0 + beta1 * s`. The ground-truth label
//! effect ratio (GLER) compares gold-labeled, random-labeled, and zero-shot
//! performance as `(y_gt - y_rl) / (y_gt - y_zero)`, clipped to [0, 1];
//! the ratio is degenerate when demonstrations do not beat zero-shot
//! (`y_gt <= y_zero`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::student_t_two_sided_p;

/// Fraction of positions where the prediction equals the gold label.
pub fn accuracy(predictions: &[usize], golds: &[usize]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = predictions
        .iter()
        .zip(golds)
        .filter(|(p, g)| p == g)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Unweighted mean F1 over all `n_classes` classes. A class with zero
/// precision and recall (absent classes included) contributes 0.
pub fn macro_f1(predictions: &[usize], golds: &[usize], n_classes: usize) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &g) in predictions.iter().zip(golds) {
        for idx in [p, g] {
            if idx >= n_classes {
                return Err(Error::LabelIndexOutOfRange {
                    index: idx,
                    classes: n_classes,
                });
            }
        }
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        let precision = if tp[c] + fp[c] == 0 {
            0.0
        } else {
            tp[c] as f64 / (tp[c] + fp[c]) as f64
        };
        let recall = if tp[c] + fn_[c] == 0 {
            0.0
        } else {
            tp[c] as f64 / (tp[c] + fn_[c]) as f64
        };
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(total / n_classes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub beta0: f64,
    /// The sensitivity: change in performance per unit of label
    /// correctness (s runs from 0 to 1).
    pub beta1: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Closed-form OLS of `y` on `s` over `(s, y)` points. Needs at least two
/// distinct `s` values. `r_squared` is 1 by convention when the responses
/// have zero variance (the fit is then exact).
pub fn fit_sensitivity(points: &[(f64, f64)]) -> Result<FitResult> {
    let n = points.len();
    {
        let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::DegenerateDesign);
        }
    }
    let nf = n as f64;
    let s_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut ss_tot = 0.0;
    for &(s, y) in points {
        let ds = s - s_mean;
        let dy = y - y_mean;
        sxx += ds * ds;
        sxy += ds * dy;
        ss_tot += dy * dy;
    }
    let beta1 = sxy / sxx;
    let beta0 = y_mean - beta1 * s_mean;
    let ss_res: f64 = points
        .iter()
        .map(|&(s, y)| {
            let r = y - (beta0 + beta1 * s);
            r * r
        })
        .sum();
    // Constant responses leave ss_tot at rounding noise (each deviation is
    // within an ulp of the mean), never exactly zero; anything at that
    // scale is zero variance, not signal.
    let noise_floor = nf * (f64::EPSILON * y_mean.abs().max(1.0)).powi(2) * 4.0;
    let r_squared = if ss_tot <= noise_floor { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(FitResult {
        beta0,
        beta1,
        r_squared,
        n_points: n,
    })
}

/// Standard error of the fitted slope; `None` without residual degrees of
/// freedom (n <= 2).
pub fn slope_standard_error(points: &[(f64, f64)], fit: &FitResult) -> Option<f64> {
    let n = points.len();
    if n <= 2 {
        return None;
    }
    let s_mean = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let sxx: f64 = points
        .iter()
        .map(|&(s, _)| (s - s_mean) * (s - s_mean))
        .sum();
    let ss_res: f64 = points
        .iter()
        .map(|&(s, y)| {
            let r = y - (fit.beta0 + fit.beta1 * s);
            r * r
        })
        .sum();
    Some((ss_res / (n - 2) as f64 / sxx).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlerResult {
    /// Clipped ratio in [0, 1]; absent when degenerate.
    pub value: Option<f64>,
    /// Unclipped ratio; may be infinite or NaN when degenerate.
    pub raw: f64,
    /// Demonstrations did not beat zero-shot (`y_gt <= y_zero`), so the
    /// ratio has no meaningful scale.
    pub degenerate: bool,
}

/// Ground-truth label effect ratio from gold-demo, random-label, and
/// zero-shot performance.
pub fn compute_gler(y_gt: f64, y_rl: f64, y_zero: f64) -> GlerResult {
    let raw = (y_gt - y_rl) / (y_gt - y_zero);
    if y_gt <= y_zero {
        GlerResult {
            value: None,
            raw,
            degenerate: true,
        }
    } else {
        GlerResult {
            value: Some(raw.clamp(0.0, 1.0)),
            raw,
            degenerate: false,
        }
    }
}

/// Performance over a baseline (uniform-random or majority-class rate).
pub fn relative_performance(y: f64, baseline: f64) -> f64 {
    y - baseline
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    /// Two-sided p-value from the exact t distribution with n-2 degrees of
    /// freedom.
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with its two-sided significance. Needs at least 3
/// points and nonzero variance on both sides.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 3 points, got {n}"
        )));
    }
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - x_mean) * (x - x_mean);
        syy += (y - y_mean) * (y - y_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero variance on one side".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_two_sided_p(t, df)
    };
    Ok(CorrelationResult { r, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 0]).unwrap(), 2.0 / 3.0);
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(
            accuracy(&[0], &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn random_predictions_score_near_chance() {
        let mut rng = StreamRng::keyed(0, &["acc-mc"]);
        let golds: Vec<usize> = (0..10_000).map(|i| i % 4).collect();
        let preds: Vec<usize> = (0..10_000).map(|_| rng.gen_index(4)).collect();
        let acc = accuracy(&preds, &golds).unwrap();
        assert!((acc - 0.25).abs() < 0.02, "acc = {acc}");
    }

    #[test]
    fn macro_f1_averages_over_all_classes() {
        // All predictions class 0, golds half and half: F1 = {2/3, 0}.
        let preds = vec![0; 10];
        let golds: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let f1 = macro_f1(&preds, &golds, 2).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-12);

        // Perfect predictions still average in absent classes as 0.
        let preds = vec![0, 0, 1, 1];
        let golds = vec![0, 0, 1, 1];
        let f1 = macro_f1(&preds, &golds, 3).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);

        assert!((macro_f1(&golds, &golds, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            macro_f1(&[5], &[0], 2),
            Err(Error::LabelIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn fit_recovers_an_exact_line() {
        let fit = fit_sensitivity(&[(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)]).unwrap();
        assert!((fit.beta0 - 1.0).abs() < 1e-12);
        assert!((fit.beta1 - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 3);
    }

    #[test]
    fn fit_matches_hand_computed_moments() {
        // Five-point accuracy curve; the slope and intercept below are the
        // frozen closed-form values of sxy/sxx and y_mean - beta1/2.
        let points = [
            (0.0, 0.1792),
            (0.25, 0.3020),
            (0.5, 0.3900),
            (0.75, 0.4688),
            (1.0, 0.4924),
        ];
        let fit = fit_sensitivity(&points).unwrap();
        assert!((fit.beta1 - 0.31728).abs() < 1e-12, "beta1 = {}", fit.beta1);
        assert!((fit.beta0 - 0.20784).abs() < 1e-12, "beta0 = {}", fit.beta0);
        assert!(fit.r_squared > 0.9 && fit.r_squared < 1.0);
    }

    #[test]
    fn fit_rejects_degenerate_designs() {
        assert!(matches!(
            fit_sensitivity(&[(0.5, 0.1), (0.5, 0.9)]),
            Err(Error::DegenerateDesign)
        ));
        assert!(matches!(fit_sensitivity(&[]), Err(Error::DegenerateDesign)));
        assert!(matches!(
            fit_sensitivity(&[(1.0, 1.0)]),
            Err(Error::DegenerateDesign)
        ));
    }

    #[test]
    fn flat_responses_fit_perfectly_by_convention() {
        let fit = fit_sensitivity(&[(0.0, 0.4), (0.5, 0.4), (1.0, 0.4)]).unwrap();
        assert_eq!(fit.beta1, 0.0);
        assert!((fit.beta0 - 0.4).abs() < 1e-15);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_is_affine_equivariant() {
        let mut rng = StreamRng::keyed(3, &["affine"]);
        for _ in 0..100 {
            let points: Vec<(f64, f64)> = (0..8)
                .map(|i| {
                    (
                        i as f64 / 7.0,
                        rng.gen_range(1000) as f64 / 1000.0,
                    )
                })
                .collect();
            let a = 0.25 + rng.gen_range(1000) as f64 / 500.0;
            let b = rng.gen_range(1000) as f64 / 1000.0 - 0.5;
            let scaled: Vec<(f64, f64)> =
                points.iter().map(|&(s, y)| (s, a * y + b)).collect();
            let base = fit_sensitivity(&points).unwrap();
            let moved = fit_sensitivity(&scaled).unwrap();
            assert!((moved.beta1 - a * base.beta1).abs() < 1e-9);
            assert!((moved.beta0 - (a * base.beta0 + b)).abs() < 1e-9);
            assert!((moved.r_squared - base.r_squared).abs() < 1e-9);
        }
    }

    #[test]
    fn r_squared_equals_squared_pearson() {
        let mut rng = StreamRng::keyed(5, &["r2"]);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
            let ys: Vec<f64> = (0..10)
                .map(|i| i as f64 * 0.3 + rng.gen_range(100) as f64 / 100.0)
                .collect();
            let points: Vec<(f64, f64)> =
                xs.iter().copied().zip(ys.iter().copied()).collect();
            let fit = fit_sensitivity(&points).unwrap();
            let corr = pearson(&xs, &ys).unwrap();
            assert!(
                (fit.r_squared - corr.r * corr.r).abs() < 1e-10,
                "{} vs {}",
                fit.r_squared,
                corr.r * corr.r
            );
        }
    }

    #[test]
    fn slope_standard_error_shrinks_with_noise() {
        let exact = [(0.0, 0.2), (0.5, 0.5), (1.0, 0.8)];
        let fit = fit_sensitivity(&exact).unwrap();
        let se = slope_standard_error(&exact, &fit).unwrap();
        assert!(se < 1e-12);

        let noisy = [(0.0, 0.25), (0.5, 0.4), (1.0, 0.85)];
        let fit = fit_sensitivity(&noisy).unwrap();
        let se = slope_standard_error(&noisy, &fit).unwrap();
        assert!(se > 0.01);

        assert!(slope_standard_error(&exact[..2], &fit).is_none());
    }

    #[test]
    fn gler_golden_ratio() {
        let g = compute_gler(0.4924, 0.2808, 0.2160);
        assert!(!g.degenerate);
        // (0.4924 - 0.2808) / (0.4924 - 0.2160) = 529/691 exactly.
        let expected = 529.0 / 691.0;
        assert!((g.value.unwrap() - expected).abs() < 1e-9);
        assert!((g.raw - expected).abs() < 1e-9);
    }

    #[test]
    fn gler_clips_and_flags_degeneracy() {
        // Random labels below zero-shot: raw above 1, clipped.
        let g = compute_gler(0.8, 0.1, 0.3);
        assert!(g.raw > 1.0);
        assert_eq!(g.value, Some(1.0));

        // Random labels above gold: raw below 0, clipped.
        let g = compute_gler(0.6, 0.7, 0.3);
        assert!(g.raw < 0.0);
        assert_eq!(g.value, Some(0.0));

        // y_rl equal to y_zero: the ratio is exactly 1.
        let g = compute_gler(0.8, 0.3, 0.3);
        assert_eq!(g.value, Some(1.0));

        // Demos no better than zero-shot: degenerate, no value.
        let g = compute_gler(0.3, 0.2, 0.5);
        assert!(g.degenerate);
        assert_eq!(g.value, None);
        let g = compute_gler(0.5, 0.2, 0.5);
        assert!(g.degenerate);
    }

    #[test]
    fn relative_performance_is_a_difference() {
        assert!((relative_performance(0.9, 0.25) - 0.65).abs() < 1e-15);
        assert!(relative_performance(0.2, 0.5) < 0.0);
    }

    #[test]
    fn pearson_basics_and_errors() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        let c = pearson(&xs, &ys).unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        assert_eq!(c.p_value, 0.0);

        let anti: Vec<f64> = ys.iter().map(|y| -y).collect();
        let c = pearson(&xs, &anti).unwrap();
        assert!((c.r + 1.0).abs() < 1e-12);

        assert!(matches!(
            pearson(&[1.0, 2.0], &[3.0, 4.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pearson_p_value_matches_reference_distribution() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let mut rng = StreamRng::keyed(8, &["pearson-ref"]);
        for trial in 0..40 {
            let n = 4 + rng.gen_index(12);
            let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let ys: Vec<f64> = (0..n)
                .map(|i| i as f64 * 0.2 + rng.gen_range(1000) as f64 / 250.0)
                .collect();
            let c = pearson(&xs, &ys).unwrap();
            if c.r.abs() >= 1.0 {
                continue;
            }
            let df = (n - 2) as f64;
            let t = c.r * (df / (1.0 - c.r * c.r)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            let expected = 2.0 * (1.0 - dist.cdf(t.abs()));
            assert!(
                (c.p_value - expected).abs() < 1e-10,
                "trial {trial}: {} vs {expected}",
                c.p_value
            );
        }
    }
}
