//! The clinic-side naive slope statistic and its bootstrap interval.
//!
//! The statistic averages, over all condition pairs with equal weight,
//! the difference in per-condition mean outcome divided by the weight gap.
//! For balanced data this equals the trial-sum form of the pairing
//! estimator; per-condition means generalize it to unbalanced data.

use rand::Rng;

use crate::data::SubjectTrials;
use crate::error::{Error, Result};
use crate::seed;

/// One audited pairing term: condition indices (ascending-weight order,
/// `upper > lower`) and the pair slope (mean difference / weight gap).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub upper: usize,
    pub lower: usize,
    pub slope: f64,
}

/// The naive slope statistic with its per-pair audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveSlope {
    /// Equally weighted mean of the per-pair slopes (log-N/ms per kg).
    pub value: f64,
    /// Number of pairs, J(J-1)/2 for J conditions.
    pub n_pairs: usize,
    pub per_pair_terms: Vec<PairTerm>,
}

/// Slope from per-condition means. `weights_kg` must be strictly
/// increasing with matching `means`.
pub fn naive_slope_from_means(weights_kg: &[f64], means: &[f64]) -> Result<f64> {
    if weights_kg.len() != means.len() {
        return Err(Error::Validation(
            "weights and means must have equal length".to_string(),
        ));
    }
    if weights_kg.len() < 2 {
        return Err(Error::Validation(
            "the naive slope needs at least 2 conditions".to_string(),
        ));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for hi in 1..weights_kg.len() {
        for lo in 0..hi {
            let gap = weights_kg[hi] - weights_kg[lo];
            if gap <= 0.0 {
                return Err(Error::Validation(
                    "weights must be strictly increasing".to_string(),
                ));
            }
            sum += (means[hi] - means[lo]) / gap;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Compute the naive slope for one subject's trials.
pub fn naive_slope(trials: &SubjectTrials) -> Result<NaiveSlope> {
    let conditions = trials.conditions();
    if conditions.len() < 2 {
        return Err(Error::Validation(format!(
            "subject {}: the naive slope needs at least 2 distinct conditions, got {}",
            trials.subject_id(),
            conditions.len()
        )));
    }
    let weights = trials.weights_kg();
    let means = trials.condition_means();
    let mut per_pair_terms = Vec::with_capacity(weights.len() * (weights.len() - 1) / 2);
    for hi in 1..weights.len() {
        for lo in 0..hi {
            per_pair_terms.push(PairTerm {
                upper: hi,
                lower: lo,
                slope: (means[hi] - means[lo]) / (weights[hi] - weights[lo]),
            });
        }
    }
    let n_pairs = per_pair_terms.len();
    let value = per_pair_terms.iter().map(|t| t.slope).sum::<f64>() / n_pairs as f64;
    Ok(NaiveSlope {
        value,
        n_pairs,
        per_pair_terms,
    })
}

/// Percentile bootstrap confidence interval for the naive slope:
/// trials are resampled with replacement within each condition, the
/// conditions themselves stay fixed. Deterministic for a fixed seed.
pub fn slope_ci(
    trials: &SubjectTrials,
    level: f64,
    n_boot: u32,
    seed_value: u64,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    if n_boot < 100 {
        return Err(Error::Config(format!(
            "n_boot must be at least 100, got {n_boot}"
        )));
    }
    let conditions = trials.conditions();
    if conditions.len() < 2 {
        return Err(Error::Validation(
            "the naive slope needs at least 2 distinct conditions".to_string(),
        ));
    }
    if conditions.iter().all(|c| c.outcomes.len() < 2) {
        return Err(Error::Validation(
            "bootstrap needs at least 2 trials in at least one condition".to_string(),
        ));
    }

    let weights = trials.weights_kg();
    let mut rng = seed::stream(seed_value, "slope-ci", 0);
    let mut stats = Vec::with_capacity(n_boot as usize);
    let mut means = vec![0.0; conditions.len()];
    for _ in 0..n_boot {
        for (k, cond) in conditions.iter().enumerate() {
            let n = cond.outcomes.len();
            let mut sum = 0.0;
            for _ in 0..n {
                sum += cond.outcomes[rng.random_range(0..n)];
            }
            means[k] = sum / n as f64;
        }
        stats.push(naive_slope_from_means(&weights, &means)?);
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_q = (1.0 - level) / 2.0;
    let hi_q = (1.0 + level) / 2.0;
    Ok((
        lower_quantile(&stats, lo_q),
        lower_quantile(&stats, hi_q),
    ))
}

/// k-th smallest with k = ceil(q*n), clamped to the valid range.
/// `sorted` must be ascending and nonempty.
pub(crate) fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = (q * n as f64).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}
