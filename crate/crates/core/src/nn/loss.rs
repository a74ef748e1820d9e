//! Softmax cross-entropy: softmax followed by negative log-likelihood of
//! the true class, fused for numerical stability.

use crate::error::{Error, Result};

/// Loss and gradient with respect to the logits for one example.
///
/// The loss is computed as `logsumexp(logits) - logits[label]` with the
/// usual max-subtraction, so saturated logits neither overflow nor go
/// negative. The gradient is `softmax(logits) - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if logits.len() < 2 {
        return Err(Error::Config(format!(
            "cross entropy needs at least 2 classes, got {}",
            logits.len()
        )));
    }
    if label >= logits.len() {
        return Err(Error::Config(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for &z in logits {
        let e = (z - max).exp();
        sum += e;
        grad.push(e);
    }
    // loss = (max + ln(sum)) - logits[label]; both terms are nonnegative
    // because sum >= exp(max - max) = 1 and max >= logits[label].
    let loss = sum.ln() + (max - logits[label]);
    let inv = 1.0 / sum;
    for g in grad.iter_mut() {
        *g *= inv;
    }
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Softmax probabilities alone (used by evaluation and tests).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_c() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0, 0.0], 1).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-15, "loss {loss}");
        let third = 1.0 / 3.0;
        assert!((grad[0] - third).abs() < 1e-15);
        assert!((grad[1] - (third - 1.0)).abs() < 1e-15);
        assert!((grad[2] - third).abs() < 1e-15);
    }

    #[test]
    fn saturated_logits_stay_finite() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.is_finite());
        assert!(loss >= 0.0);
        assert!(loss < 1e-300);
        assert!(grad.iter().all(|g| g.is_finite()));

        // The unlikely class has essentially all the loss.
        let (loss, _) = softmax_cross_entropy(&[1000.0, 0.0], 1).unwrap();
        assert!((loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn loss_is_nonnegative_and_probs_normalize() {
        let logits = [3.5, -2.0, 0.25, 11.0];
        for label in 0..4 {
            let (loss, _) = softmax_cross_entropy(&logits, label).unwrap();
            assert!(loss >= 0.0);
        }
        let p = softmax(&logits);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_out_of_range_is_an_error() {
        assert!(softmax_cross_entropy(&[0.0, 0.0], 2).is_err());
        assert!(softmax_cross_entropy(&[0.0], 0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Central differences on the loss as a function of each logit.
        let logits = [0.3, -1.2, 2.0, 0.05];
        let label = 2;
        let (_, grad) = softmax_cross_entropy(&logits, label).unwrap();
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits;
            plus[i] += h;
            let mut minus = logits;
            minus[i] -= h;
            let (lp, _) = softmax_cross_entropy(&plus, label).unwrap();
            let (lm, _) = softmax_cross_entropy(&minus, label).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let denom = grad[i].abs().max(1e-6);
            assert!(
                ((grad[i] - fd) / denom).abs() < 1e-6,
                "logit {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }
}
