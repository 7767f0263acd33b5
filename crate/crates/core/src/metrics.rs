//! Error fraction, rescaled success probability and recall.
//!
//! Estimates are sorted lists of distinct node ids, truth is a
//! [`GroundTruth`] indicator.

use crate::model::GroundTruth;
use crate::{Error, Result};

fn check_estimate(n: usize, estimated: &[u32]) -> Result<()> {
    for w in estimated.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid("estimate must be sorted and free of duplicates"));
        }
    }
    if let Some(&last) = estimated.last() {
        if last as usize >= n {
            return Err(Error::NodeOutOfRange { id: last as u64, n });
        }
    }
    Ok(())
}

/// `|S ∩ Ŝ|`
pub fn intersection_size(truth: &GroundTruth, estimated: &[u32]) -> usize {
    estimated.iter().filter(|&&i| truth.sigma[i as usize]).count()
}

/// `|S Δ Ŝ|`
pub fn symmetric_difference_size(truth: &GroundTruth, estimated: &[u32]) -> usize {
    truth.k() + estimated.len() - 2 * intersection_size(truth, estimated)
}

/// `r_n = |S \ Ŝ|`, the number of community members missed.
pub fn misclassified_members(truth: &GroundTruth, estimated: &[u32]) -> usize {
    truth.k() - intersection_size(truth, estimated)
}

/// `|S Δ Ŝ| / K` for an estimate of size `K`. Lies in `[0, 2]`.
pub fn error_fraction(truth: &GroundTruth, estimated: &[u32]) -> Result<f64> {
    check_estimate(truth.n(), estimated)?;
    let k = truth.k();
    if k == 0 {
        return Err(Error::invalid("error fraction needs a non-empty community"));
    }
    if estimated.len() != k {
        return Err(Error::SizeMismatch(format!(
            "estimate has {} nodes, community has {k}",
            estimated.len()
        )));
    }
    Ok(symmetric_difference_size(truth, estimated) as f64 / k as f64)
}

/// Error on the part of the community not revealed by cues:
/// `|S̄ Δ Ŝ'| / |S̄|` with `S̄ = S \ C` and `Ŝ' = Ŝ \ C`.
pub fn error_fraction_excluding_cues(truth: &GroundTruth, cues: &[bool], estimated: &[u32]) -> Result<f64> {
    check_estimate(truth.n(), estimated)?;
    if cues.len() != truth.n() {
        return Err(Error::SizeMismatch(format!(
            "{} cue entries for {} nodes",
            cues.len(),
            truth.n()
        )));
    }
    let residual = (0..truth.n()).filter(|&i| truth.sigma[i] && !cues[i]).count();
    if residual == 0 {
        return Err(Error::invalid("every community member is a cue"));
    }
    let mut est_size = 0usize;
    let mut common = 0usize;
    for &i in estimated {
        let i = i as usize;
        if cues[i] {
            continue;
        }
        est_size += 1;
        if truth.sigma[i] {
            common += 1;
        }
    }
    Ok((residual + est_size - 2 * common) as f64 / residual as f64)
}

/// `|S ∩ Ŝ| / |S|`
pub fn recall(truth: &GroundTruth, estimated: &[u32]) -> Result<f64> {
    check_estimate(truth.n(), estimated)?;
    if truth.k() == 0 {
        return Err(Error::invalid("recall needs a non-empty truth set"));
    }
    Ok(intersection_size(truth, estimated) as f64 / truth.k() as f64)
}

/// Denominator convention for recall with cues removed from both sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallDenominator {
    /// `|S|`
    Community,
    /// `|S \ C|`
    CommunityWithoutCues,
}

/// `|(S ∩ Ŝ) \ C|` over the chosen denominator.
pub fn recall_excluding_cues(
    truth: &GroundTruth,
    cues: &[bool],
    estimated: &[u32],
    denominator: RecallDenominator,
) -> Result<f64> {
    check_estimate(truth.n(), estimated)?;
    if cues.len() != truth.n() {
        return Err(Error::SizeMismatch(format!(
            "{} cue entries for {} nodes",
            cues.len(),
            truth.n()
        )));
    }
    let hits = estimated
        .iter()
        .filter(|&&i| truth.sigma[i as usize] && !cues[i as usize])
        .count();
    let denom = match denominator {
        RecallDenominator::Community => truth.k(),
        RecallDenominator::CommunityWithoutCues => (0..truth.n()).filter(|&i| truth.sigma[i] && !cues[i]).count(),
    };
    if denom == 0 {
        return Err(Error::invalid("recall denominator is zero"));
    }
    Ok(hits as f64 / denom as f64)
}

/// Running counts behind the rescaled success probability
/// `P(i ∈ Ŝ | i ∈ S) + P(i ∉ Ŝ | i ∉ S) - 1`, pooled over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SuccessTally {
    pub hits: u64,
    pub members: u64,
    pub correct_rejections: u64,
    pub nonmembers: u64,
    /// Sum of `r_n` over trials.
    pub missed: u64,
    pub trials: u64,
}

impl SuccessTally {
    pub fn add(&mut self, truth: &GroundTruth, estimated: &[u32]) -> Result<()> {
        check_estimate(truth.n(), estimated)?;
        let k = truth.k();
        let inter = intersection_size(truth, estimated);
        let false_pos = estimated.len() - inter;
        self.hits += inter as u64;
        self.members += k as u64;
        self.nonmembers += (truth.n() - k) as u64;
        self.correct_rejections += (truth.n() - k - false_pos) as u64;
        self.missed += (k - inter) as u64;
        self.trials += 1;
        Ok(())
    }

    pub fn success_prob(&self) -> Result<f64> {
        if self.members == 0 || self.nonmembers == 0 {
            return Err(Error::invalid("success probability needs members and non-members"));
        }
        Ok(self.hits as f64 / self.members as f64 + self.correct_rejections as f64 / self.nonmembers as f64 - 1.0)
    }

    /// Mean `r_n / K` over trials (pooled).
    pub fn mean_missed_fraction(&self) -> f64 {
        self.missed as f64 / self.members as f64
    }
}

/// Rescaled success probability over a batch of `(truth, estimate)` trials.
pub fn success_prob<'a>(trials: impl IntoIterator<Item = (&'a GroundTruth, &'a [u32])>) -> Result<f64> {
    let mut tally = SuccessTally::default();
    for (truth, est) in trials {
        tally.add(truth, est)?;
    }
    if tally.trials == 0 {
        return Err(Error::invalid("success probability needs at least one trial"));
    }
    tally.success_prob()
}

/// Mean and standard error of the mean. The standard error is `0` for a
/// single value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}
