//! Bayesian hierarchical model fits.
//!
//! `fit_training` fits the training-cohort model and returns tagged
//! posterior draws of Θ = (a, β_pop, σ²_α, σ²_u, σ²_ε) with convergence
//! diagnostics; `fit_joint` extends the same sampler with the scaling
//! deficit δ = β_pop − β_test for a single test subject.

mod diagnostics;
mod gibbs;

use std::io::Write;

use rayon::prelude::*;

pub use diagnostics::gelman_rubin;

use crate::config::{PriorConfig, RunConfig};
use crate::data::{Dataset, ModelParams};
use crate::error::{Error, Result};
use crate::seed;

/// Scale reduction statistics, one per sampled parameter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RhatSummary {
    pub a: f64,
    pub beta_pop: f64,
    pub var_alpha: f64,
    pub var_u: f64,
    pub var_eps: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
}

impl RhatSummary {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("a", self.a),
            ("beta_pop", self.beta_pop),
            ("var_alpha", self.var_alpha),
            ("var_u", self.var_u),
            ("var_eps", self.var_eps),
        ];
        if let Some(d) = self.delta {
            out.push(("delta", d));
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.entries()
            .into_iter()
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All scale reduction factors at or below the 1.1 rule.
    pub fn converged(&self) -> bool {
        self.entries().into_iter().all(|(_, v)| v <= 1.1)
    }
}

/// One retained draw tagged by chain and within-chain iteration (both
/// 1-based; iterations count from the start of the chain, so the first
/// retained iteration is burn_in + 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorDraw {
    pub chain: u32,
    pub iter: u32,
    pub params: ModelParams,
}

/// One retained joint-model draw; δ = β_pop − β_test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPosteriorDraw {
    pub chain: u32,
    pub iter: u32,
    pub params: ModelParams,
    pub delta: f64,
}

impl JointPosteriorDraw {
    pub fn beta_test(&self) -> f64 {
        self.params.beta_pop - self.delta
    }
}

/// Posterior draws from the training fit: post burn-in, all chains
/// concatenated in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<PosteriorDraw>,
    pub rhat: RhatSummary,
    pub seed: u64,
    pub run: RunConfig,
    pub converged: bool,
}

impl PosteriorDraws {
    pub fn params(&self) -> impl Iterator<Item = &ModelParams> {
        self.draws.iter().map(|d| &d.params)
    }

    pub fn beta_pop_mean(&self) -> f64 {
        self.params().map(|p| p.beta_pop).sum::<f64>() / self.draws.len() as f64
    }

    /// Export as `chain,iter,a,beta_pop,var_alpha,var_u,var_eps`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let to_err = |e: std::io::Error| Error::io("<writer>", e);
        writeln!(w, "chain,iter,a,beta_pop,var_alpha,var_u,var_eps").map_err(to_err)?;
        for d in &self.draws {
            let p = &d.params;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                d.chain, d.iter, p.grand_intercept, p.beta_pop, p.var_alpha, p.var_u, p.var_eps
            )
            .map_err(to_err)?;
        }
        Ok(())
    }
}

/// Posterior draws from the joint (training + one test subject) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPosteriorDraws {
    pub draws: Vec<JointPosteriorDraw>,
    pub rhat: RhatSummary,
    pub seed: u64,
    pub run: RunConfig,
    pub converged: bool,
}

impl JointPosteriorDraws {
    /// Fraction of draws with δ ≤ 0 (ties count as ≤).
    pub fn posterior_prob_delta_leq_zero(&self) -> f64 {
        let k = self.draws.iter().filter(|d| d.delta <= 0.0).count();
        k as f64 / self.draws.len() as f64
    }

    /// Export as `chain,iter,a,beta_pop,var_alpha,var_u,var_eps,delta`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let to_err = |e: std::io::Error| Error::io("<writer>", e);
        writeln!(w, "chain,iter,a,beta_pop,var_alpha,var_u,var_eps,delta").map_err(to_err)?;
        for d in &self.draws {
            let p = &d.params;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                d.chain,
                d.iter,
                p.grand_intercept,
                p.beta_pop,
                p.var_alpha,
                p.var_u,
                p.var_eps,
                d.delta
            )
            .map_err(to_err)?;
        }
        Ok(())
    }
}

/// Posterior probability that the test subject shows no scaling deficit.
pub fn posterior_prob_delta_leq_zero(joint: &JointPosteriorDraws) -> f64 {
    joint.posterior_prob_delta_leq_zero()
}

/// Optional overrides for validation studies: hold a variance component
/// fixed at a known value instead of sampling it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitControl {
    pub fix_var_alpha: Option<f64>,
    pub fix_var_u: Option<f64>,
}

impl FitControl {
    fn validate(&self) -> Result<()> {
        for v in [self.fix_var_alpha, self.fix_var_u].into_iter().flatten() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "fixed variance components must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Fit the training-cohort model by Gibbs sampling.
pub fn fit_training(
    train: &Dataset,
    priors: &PriorConfig,
    run: &RunConfig,
) -> Result<PosteriorDraws> {
    fit_training_with(train, priors, run, &FitControl::default())
}

pub fn fit_training_with(
    train: &Dataset,
    priors: &PriorConfig,
    run: &RunConfig,
    control: &FitControl,
) -> Result<PosteriorDraws> {
    run.validate()?;
    priors.validate()?;
    control.validate()?;
    if train.n_subjects() < 2 {
        return Err(Error::Validation(format!(
            "training fit needs at least 2 subjects, got {}",
            train.n_subjects()
        )));
    }
    if train.design().n_conditions() < 2 {
        return Err(Error::Validation(
            "training fit needs at least 2 weight conditions".to_string(),
        ));
    }
    let stats = gibbs::SuffStats::from_datasets(train, None)?;
    stats.check_identifiable()?;

    let chains = run_chains(&stats, priors, run, control, false);
    let (rhat, converged) = summarize_rhat(&chains, false)?;
    let draws = chains
        .into_iter()
        .enumerate()
        .flat_map(|(c, chain)| {
            chain.into_iter().map(move |d| PosteriorDraw {
                chain: c as u32 + 1,
                iter: d.iter,
                params: d.params,
            })
        })
        .collect();
    Ok(PosteriorDraws {
        draws,
        rhat,
        seed: run.seed,
        run: *run,
        converged,
    })
}

/// Fit the joint model for one test subject under the null design,
/// returning per-draw δ.
pub fn fit_joint(
    train: &Dataset,
    test: &Dataset,
    priors: &PriorConfig,
    run: &RunConfig,
) -> Result<JointPosteriorDraws> {
    fit_joint_with(train, test, priors, run, &FitControl::default())
}

pub fn fit_joint_with(
    train: &Dataset,
    test: &Dataset,
    priors: &PriorConfig,
    run: &RunConfig,
    control: &FitControl,
) -> Result<JointPosteriorDraws> {
    run.validate()?;
    priors.validate()?;
    control.validate()?;
    if train.n_subjects() < 2 {
        return Err(Error::Validation(
            "joint fit needs at least 2 training subjects".to_string(),
        ));
    }
    if test.n_subjects() != 1 {
        return Err(Error::Validation(format!(
            "joint fit needs exactly one test subject, got {}",
            test.n_subjects()
        )));
    }
    if test.design().n_conditions() < 2 {
        return Err(Error::Validation(
            "the test subject needs at least 2 weight conditions".to_string(),
        ));
    }
    let test_id = test.subject_ids()[0].to_string();
    if train.subject_ids().contains(&test_id.as_str()) {
        return Err(Error::Validation(format!(
            "test subject id '{test_id}' collides with a training subject"
        )));
    }
    let stats = gibbs::SuffStats::from_datasets(train, Some(test))?;
    stats.check_identifiable()?;

    let chains = run_chains(&stats, priors, run, control, true);
    let (rhat, converged) = summarize_rhat(&chains, true)?;
    let draws = chains
        .into_iter()
        .enumerate()
        .flat_map(|(c, chain)| {
            chain.into_iter().map(move |d| JointPosteriorDraw {
                chain: c as u32 + 1,
                iter: d.iter,
                params: d.params,
                delta: d.delta,
            })
        })
        .collect();
    Ok(JointPosteriorDraws {
        draws,
        rhat,
        seed: run.seed,
        run: *run,
        converged,
    })
}

/// Chains run concurrently, each on its own stream derived from
/// (seed, chain index); collection order is fixed, so results do not
/// depend on scheduling.
fn run_chains(
    stats: &gibbs::SuffStats,
    priors: &PriorConfig,
    run: &RunConfig,
    control: &FitControl,
    joint: bool,
) -> Vec<Vec<gibbs::ChainDraw>> {
    (0..run.chains)
        .into_par_iter()
        .map(|c| gibbs::run_chain(stats, priors, run, control, joint, c))
        .collect()
}

fn summarize_rhat(
    chains: &[Vec<gibbs::ChainDraw>],
    joint: bool,
) -> Result<(RhatSummary, bool)> {
    let trace = |f: &dyn Fn(&gibbs::ChainDraw) -> f64| -> Result<f64> {
        let per_chain: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.iter().map(f).collect())
            .collect();
        gelman_rubin(&per_chain)
    };
    let rhat = RhatSummary {
        a: trace(&|d| d.params.grand_intercept)?,
        beta_pop: trace(&|d| d.params.beta_pop)?,
        var_alpha: trace(&|d| d.params.var_alpha)?,
        var_u: trace(&|d| d.params.var_u)?,
        var_eps: trace(&|d| d.params.var_eps)?,
        delta: if joint { Some(trace(&|d| d.delta)?) } else { None },
    };
    let converged = rhat.converged();
    Ok((rhat, converged))
}

/// Draws from the σ²_α block with no subjects observed, i.e. from the
/// Inv-Gamma(η, ν) prior itself. Exercises the same code path the
/// sampler uses for that block.
pub fn prior_var_alpha_draws(priors: &PriorConfig, n: usize, seed_value: u64) -> Result<Vec<f64>> {
    priors.validate()?;
    let mut rng = seed::stream(seed_value, "prior-var-alpha", 0);
    Ok((0..n)
        .map(|_| gibbs::draw_var_alpha(&mut rng, priors, &[], 0.0))
        .collect())
}

/// Canonical per-subject likelihood summaries: for each subject the list
/// of (weight, trial count, cell mean, within-cell sum of squares) sorted
/// by weight, with the subjects themselves sorted canonically. Relabeling
/// subjects leaves this value unchanged, and it determines the posterior.
pub fn subject_summaries(data: &Dataset) -> Result<Vec<Vec<(f64, u64, f64, f64)>>> {
    let mut out = Vec::new();
    for sid in data.subject_ids() {
        let trials = data.subject_trials(sid)?;
        let mut rows = Vec::new();
        for c in trials.conditions() {
            let n = c.outcomes.len() as f64;
            let mean = c.outcomes.iter().sum::<f64>() / n;
            let ss: f64 = c.outcomes.iter().map(|y| (y - mean).powi(2)).sum();
            rows.push((c.weight_kg, c.outcomes.len() as u64, mean, ss));
        }
        out.push(rows);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DesignSpec, TrialRecord};
    use rand_distr::{Distribution, Normal};

    fn simulate_cohort(
        truth: &ModelParams,
        design: &DesignSpec,
        n_subjects: usize,
        seed_value: u64,
    ) -> Dataset {
        let mut rng = seed::stream(seed_value, "test-cohort", 0);
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let mut records = Vec::new();
        for s in 0..n_subjects {
            let alpha = truth.grand_intercept
                + truth.var_alpha.sqrt() * std_normal.sample(&mut rng);
            for w in design.weights_kg() {
                let u = truth.var_u.sqrt() * std_normal.sample(&mut rng);
                for t in 1..=design.trials_per_condition() {
                    let y = alpha
                        + truth.beta_pop * w
                        + u
                        + truth.var_eps.sqrt() * std_normal.sample(&mut rng);
                    records.push(TrialRecord {
                        subject_id: format!("s{s}"),
                        condition_weight: *w,
                        trial_index: t,
                        outcome: y,
                    });
                }
            }
        }
        Dataset::new(records, Some(design.clone())).unwrap()
    }

    fn reference_truth() -> ModelParams {
        ModelParams {
            grand_intercept: 2.8,
            beta_pop: 1.4,
            var_alpha: 0.09,
            var_u: 0.01,
            var_eps: 0.04,
        }
    }

    fn reference_design() -> DesignSpec {
        let grams: Vec<f64> = (0..10).map(|k| 250.0 + 50.0 * k as f64).collect();
        DesignSpec::from_grams(&grams, 6).unwrap()
    }

    #[test]
    fn prior_only_var_alpha_block_matches_prior_mean() {
        // Inv-Gamma(5, 1): mean nu/(eta-1) = 0.25, sd sqrt(1/48).
        let priors = PriorConfig::default();
        let draws = prior_var_alpha_draws(&priors, 4000, 11).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let mc_se = (1.0 / 48.0_f64).sqrt() / (draws.len() as f64).sqrt();
        assert!(
            (mean - 0.25).abs() < 3.0 * mc_se,
            "prior mean {mean} vs 0.25 (3 se = {})",
            3.0 * mc_se
        );
    }

    #[test]
    fn recovery_on_reference_cohort() {
        let truth = reference_truth();
        let data = simulate_cohort(&truth, &reference_design(), 10, 501);
        let run = RunConfig {
            seed: 7,
            ..RunConfig::default()
        };
        let fit = fit_training(&data, &PriorConfig::default(), &run).unwrap();
        assert_eq!(fit.draws.len(), 3000);

        let betas: Vec<f64> = fit.params().map(|p| p.beta_pop).collect();
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        let sd = (betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>()
            / (betas.len() as f64 - 1.0))
            .sqrt();
        assert!(
            (mean - 1.4).abs() < 3.0 * sd,
            "beta_pop mean {mean}, sd {sd}"
        );
        assert!(fit.converged, "rhat = {:?}", fit.rhat);
        assert!(fit.rhat.max() < 1.1);
    }

    #[test]
    fn fits_are_bit_identical_for_fixed_seed() {
        let truth = reference_truth();
        let design = DesignSpec::from_grams(&[250.0, 500.0, 750.0], 4).unwrap();
        let data = simulate_cohort(&truth, &design, 4, 99);
        let run = RunConfig {
            seed: 3,
            chains: 2,
            draws_per_chain: 200,
            burn_in: 100,
            ..RunConfig::default()
        };
        let a = fit_training(&data, &PriorConfig::default(), &run).unwrap();
        let b = fit_training(&data, &PriorConfig::default(), &run).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.rhat, b.rhat);
    }

    #[test]
    fn degenerate_data_is_reported() {
        let design = DesignSpec::from_grams(&[250.0, 500.0], 2).unwrap();
        let mut records = Vec::new();
        for s in 0..3 {
            for w in design.weights_kg() {
                for t in 1..=2 {
                    records.push(TrialRecord {
                        subject_id: format!("s{s}"),
                        condition_weight: *w,
                        trial_index: t,
                        outcome: 2.8, // constant everywhere
                    });
                }
            }
        }
        let data = Dataset::new(records, Some(design)).unwrap();
        let err = fit_training(&data, &PriorConfig::default(), &RunConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn no_replication_is_reported() {
        let design = DesignSpec::from_grams(&[250.0, 500.0], 1).unwrap();
        let mut records = Vec::new();
        let mut rng = seed::stream(1, "norep", 0);
        let noise = Normal::new(0.0, 0.1).unwrap();
        for s in 0..3 {
            for w in design.weights_kg() {
                records.push(TrialRecord {
                    subject_id: format!("s{s}"),
                    condition_weight: *w,
                    trial_index: 1,
                    outcome: 2.8 + 1.4 * w + noise.sample(&mut rng),
                });
            }
        }
        let data = Dataset::new(records, Some(design)).unwrap();
        let err = fit_training(&data, &PriorConfig::default(), &RunConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("residual degrees of freedom"), "{err}");
    }

    #[test]
    fn joint_fit_requires_single_fresh_test_subject() {
        let truth = reference_truth();
        let design = DesignSpec::from_grams(&[250.0, 500.0], 3).unwrap();
        let train = simulate_cohort(&truth, &design, 3, 5);
        let run = RunConfig {
            chains: 2,
            draws_per_chain: 120,
            burn_in: 60,
            ..RunConfig::default()
        };

        // Empty test set.
        let empty = Dataset::new(Vec::new(), Some(design.clone())).unwrap();
        assert!(fit_joint(&train, &empty, &PriorConfig::default(), &run).is_err());

        // Two test subjects.
        let two = simulate_cohort(&truth, &design, 2, 6);
        assert!(fit_joint(&train, &two, &PriorConfig::default(), &run).is_err());

        // Id collision.
        let colliding = simulate_cohort(&truth, &design, 1, 7);
        assert!(fit_joint(&train, &colliding, &PriorConfig::default(), &run).is_err());
    }

    #[test]
    fn joint_fit_recovers_known_deficit() {
        let truth = reference_truth();
        let train = simulate_cohort(&truth, &reference_design(), 10, 77);
        let test_design = DesignSpec::from_grams(&[250.0, 500.0, 750.0], 5).unwrap();
        let deficit = 1.0;
        let with_deficit = ModelParams {
            beta_pop: truth.beta_pop - deficit,
            ..truth
        };
        let mut test = simulate_cohort(&with_deficit, &test_design, 1, 78);
        let renamed: Vec<TrialRecord> = test
            .records()
            .iter()
            .map(|r| TrialRecord {
                subject_id: "patient".to_string(),
                ..r.clone()
            })
            .collect();
        test = Dataset::new(renamed, Some(test_design)).unwrap();

        let run = RunConfig {
            seed: 13,
            ..RunConfig::default()
        };
        let fit = fit_joint(&train, &test, &PriorConfig::default(), &run).unwrap();
        let deltas: Vec<f64> = fit.draws.iter().map(|d| d.delta).collect();
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let sd = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
            / (deltas.len() as f64 - 1.0))
            .sqrt();
        assert!(
            (mean - deficit).abs() < 4.0 * sd,
            "delta mean {mean}, sd {sd}"
        );
        assert!(fit.posterior_prob_delta_leq_zero() < 0.05);
        // beta_test is recoverable from each draw.
        let d0 = &fit.draws[0];
        assert_eq!(d0.beta_test(), d0.params.beta_pop - d0.delta);
    }

    #[test]
    fn exchangeability_of_subject_labels() {
        let truth = reference_truth();
        let design = DesignSpec::from_grams(&[250.0, 500.0, 750.0], 4).unwrap();
        let data = simulate_cohort(&truth, &design, 5, 41);

        // Relabel subjects by reversing ids.
        let relabeled: Vec<TrialRecord> = data
            .records()
            .iter()
            .map(|r| {
                let idx: usize = r.subject_id[1..].parse().unwrap();
                TrialRecord {
                    subject_id: format!("s{}", 4 - idx),
                    ..r.clone()
                }
            })
            .collect();
        let permuted = Dataset::new(relabeled, Some(design)).unwrap();

        let a = subject_summaries(&data).unwrap();
        let b = subject_summaries(&permuted).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gls_limit_when_variance_components_pinned_to_zero() {
        // With sigma^2_alpha and sigma^2_u pinned near zero, the model
        // collapses to ordinary regression of y on w; the posterior mean
        // of beta_pop must match the closed-form slope.
        let truth = ModelParams {
            var_alpha: 0.0,
            var_u: 0.0,
            ..reference_truth()
        };
        let design = DesignSpec::from_grams(&[250.0, 450.0, 650.0], 5).unwrap();
        let data = simulate_cohort(&truth, &design, 4, 17);

        // Closed-form OLS on all trials (common intercept).
        let (mut sw, mut sy, mut sww, mut swy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for r in data.records() {
            sw += r.condition_weight;
            sy += r.outcome;
            sww += r.condition_weight * r.condition_weight;
            swy += r.condition_weight * r.outcome;
            n += 1.0;
        }
        let ols = (swy - sw * sy / n) / (sww - sw * sw / n);

        let run = RunConfig {
            seed: 19,
            ..RunConfig::default()
        };
        let control = FitControl {
            fix_var_alpha: Some(1e-10),
            fix_var_u: Some(1e-10),
        };
        let fit = fit_training_with(&data, &PriorConfig::default(), &run, &control).unwrap();
        let mean = fit.beta_pop_mean();
        let sd = {
            let b: Vec<f64> = fit.params().map(|p| p.beta_pop).collect();
            (b.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b.len() as f64 - 1.0)).sqrt()
        };
        let mc_se = sd / (fit.draws.len() as f64).sqrt();
        assert!(
            (mean - ols).abs() < 6.0 * mc_se.max(1e-4),
            "posterior mean {mean} vs OLS {ols} (se {mc_se})"
        );
    }

    #[test]
    fn draws_csv_has_expected_shape() {
        let truth = reference_truth();
        let design = DesignSpec::from_grams(&[250.0, 500.0], 3).unwrap();
        let data = simulate_cohort(&truth, &design, 3, 2);
        let run = RunConfig {
            chains: 2,
            draws_per_chain: 60,
            burn_in: 30,
            ..RunConfig::default()
        };
        let fit = fit_training(&data, &PriorConfig::default(), &run).unwrap();
        let mut buf = Vec::new();
        fit.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "chain,iter,a,beta_pop,var_alpha,var_u,var_eps"
        );
        assert_eq!(text.lines().count(), 1 + 60);
        assert!(text.lines().nth(1).unwrap().starts_with("1,31,"));
    }
}
