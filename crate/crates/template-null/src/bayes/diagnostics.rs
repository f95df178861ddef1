//! Convergence diagnostics.

use crate::error::{Error, Result};

/// Potential scale reduction factor over per-chain parameter traces.
///
/// Classic between/within chain variance ratio: with `m` chains of
/// length `n`, W the mean within-chain sample variance and B/n the
/// variance of the chain means, R = sqrt(((n-1)/n W + B/n) / W). The
/// result is clamped below at 1, so identical chains return exactly 1.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::Sampler(
            "the scale reduction factor needs at least 2 chains".to_string(),
        ));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Sampler("chains must have equal lengths".to_string()));
    }
    if n < 10 {
        return Err(Error::Sampler(format!(
            "chains must hold at least 10 draws, got {n}"
        )));
    }

    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().map(|c| sample_variance(c)).collect();
    let w = mean(&vars);
    let b_over_n = sample_variance(&means);
    if b_over_n == 0.0 {
        return Ok(1.0);
    }
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    Ok((var_plus / w).sqrt().max(1.0))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_chains_give_exactly_one() {
        let c: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        assert_eq!(gelman_rubin(&[c.clone(), c]).unwrap(), 1.0);
    }

    #[test]
    fn separated_chains_blow_up() {
        let a: Vec<f64> = (0..100).map(|i| 0.0 + 1e-6 * (i % 3) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 10.0 + 1e-6 * (i % 5) as f64).collect();
        let r = gelman_rubin(&[a, b]).unwrap();
        assert!(r > 1.1, "r = {r}");
        assert!(r > 100.0, "r = {r}");
    }

    #[test]
    fn rejects_single_chain_and_bad_shapes() {
        let c: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(gelman_rubin(&[c.clone()]).is_err());
        assert!(gelman_rubin(&[c.clone(), c[..50].to_vec()]).is_err());
        assert!(gelman_rubin(&[vec![1.0; 5], vec![2.0; 5]]).is_err());
    }

    #[test]
    fn constant_but_distinct_chains_diverge() {
        let a = vec![0.0; 50];
        let b = vec![10.0; 50];
        assert!(gelman_rubin(&[a, b]).unwrap().is_infinite());
    }
}
