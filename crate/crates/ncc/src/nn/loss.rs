//! Binary cross entropy.

pub const BCE_EPS: f64 = 1e-7;

/// Mean negative log-likelihood over all prediction/target pairs.
/// Predictions are clamped to [eps, 1 - eps] before the log. Returns the
/// loss and its gradient with respect to the (clamped) predictions.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), target.len(), "bce length mismatch");
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (i, (&p, &y)) in pred.iter().zip(target).enumerate() {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad[i] = (-(y / p) + (1.0 - y) / (1.0 - p)) / n;
    }
    (loss / n, grad)
}

/// Numerically stable BCE on raw logits. Returns the mean loss and its
/// gradient with respect to the logits, `(sigmoid(z) - y) / n`.
pub fn bce_with_logits(logits: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(logits.len(), target.len(), "bce length mismatch");
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (i, (&z, &y)) in logits.iter().zip(target).enumerate() {
        // max(z, 0) - z*y + ln(1 + exp(-|z|))
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad[i] = (sigmoid(z) - y) / n;
    }
    (loss / n, grad)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(sigmoid(z)), stable for large |z|.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}
