use crate::encoders::Label;
use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Probability that a random real sample outscores a random fake one, with
/// ties counted as one half. Real is the positive class.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("auc scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&l| l == Label::Real).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("auc labels"));
    }
    // Midranks over tie groups.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] == Label::Real).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Fraction of samples whose thresholded real-probability matches the label.
pub fn acc(p_real: &[f64], labels: &[Label], threshold: f64) -> Result<f64> {
    check_lengths(p_real.len(), labels.len())?;
    if p_real.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = p_real
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p >= threshold) == (l == Label::Real))
        .count();
    Ok(hits as f64 / p_real.len() as f64)
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;
