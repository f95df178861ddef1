//! Template null distributions.
//!
//! A template is the empirical distribution of the naive slope over a
//! large number of pseudo-subjects drawn from the posterior predictive
//! under a given test design: one pseudo-subject per posterior draw,
//! cycling through the draws in order (recycling, recorded in the
//! provenance, when the requested size exceeds the posterior sample).
//! Alternatives are location shifts of the null template; the slope
//! values shift down by the hypothesized deficit δ_alt.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{PosteriorDraws, RhatSummary};
use crate::data::{DesignSpec, ModelParams};
use crate::error::{Error, Result};
use crate::estimator;
use crate::seed;

/// Version tag of the template artifact file.
pub const TEMPLATE_FORMAT_VERSION: u32 = 1;

/// Templates smaller than this are flagged as not decision-ready.
pub const MIN_DECISION_DRAWS: usize = 1000;

/// Choice of point benchmark derived from the posterior of β_pop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenchmarkStat {
    #[default]
    Mean,
    Median,
}

/// Provenance carried inside the template artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub chains: u32,
    pub draws_per_chain: u32,
    pub burn_in: u32,
    pub rhat: RhatSummary,
    pub converged: bool,
    /// True when posterior draws were recycled because the template size
    /// exceeded the posterior sample.
    pub recycled: bool,
    pub created_utc: String,
}

/// Empirical null (or shifted) distribution of the naive slope under a
/// test design.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDistribution {
    values: Vec<f64>,
    sorted: Vec<f64>,
    design: DesignSpec,
    benchmark_slope: f64,
    shift: f64,
    provenance: Provenance,
}

impl TemplateDistribution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn design(&self) -> &DesignSpec {
        &self.design
    }

    /// Posterior point benchmark for the healthy scaling factor.
    pub fn benchmark_slope(&self) -> f64 {
        self.benchmark_slope
    }

    /// Location shift applied to the null template (0 for the null).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn is_null(&self) -> bool {
        self.shift == 0.0
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Large enough for clinical decisions (warn below).
    pub fn decision_ready(&self) -> bool {
        self.len() >= MIN_DECISION_DRAWS
    }

    /// Lower empirical quantile: the k-th smallest value with
    /// k = ceil(level·M), clamped to the valid order statistics.
    pub fn critical_value(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!(
                "test level must lie in (0,1), got {level}"
            )));
        }
        Ok(estimator::lower_quantile(&self.sorted, level))
    }

    /// Location-shifted alternative: values move down by `delta_alt`.
    /// Only a null template may be shifted.
    pub fn shifted(&self, delta_alt: f64) -> Result<TemplateDistribution> {
        if !self.is_null() {
            return Err(Error::Artifact(format!(
                "template is already shifted by {}; shift the null template instead",
                self.shift
            )));
        }
        if !delta_alt.is_finite() {
            return Err(Error::Config("shift must be finite".to_string()));
        }
        Ok(TemplateDistribution {
            values: self.values.iter().map(|v| v - delta_alt).collect(),
            sorted: self.sorted.iter().map(|v| v - delta_alt).collect(),
            design: self.design.clone(),
            benchmark_slope: self.benchmark_slope,
            shift: delta_alt,
            provenance: self.provenance.clone(),
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.to_json_writer(std::io::BufWriter::new(file))
    }

    pub fn to_json_writer<W: Write>(&self, mut w: W) -> Result<()> {
        let wire = TemplateFile {
            format_version: TEMPLATE_FORMAT_VERSION,
            design: DesignWire {
                weights_g: self.design.weights_grams(),
                trials: self.design.trials_per_condition(),
            },
            benchmark_slope: self.benchmark_slope,
            shift: self.shift,
            values: self.values.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_writer_pretty(&mut w, &wire)
            .map_err(|e| Error::Artifact(format!("cannot serialize template: {e}")))?;
        writeln!(w).map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<TemplateDistribution> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json_reader(std::io::BufReader::new(file))
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<TemplateDistribution> {
        let wire: TemplateFile = serde_json::from_reader(r)
            .map_err(|e| Error::Artifact(format!("cannot parse template: {e}")))?;
        if wire.format_version != TEMPLATE_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unknown format_version {}, this build reads version {}",
                wire.format_version, TEMPLATE_FORMAT_VERSION
            )));
        }
        if wire.values.is_empty() {
            return Err(Error::Artifact("template holds no values".to_string()));
        }
        if wire.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Artifact(
                "template values must be finite".to_string(),
            ));
        }
        let design = DesignSpec::from_grams(&wire.design.weights_g, wire.design.trials)?;
        let mut sorted = wire.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(TemplateDistribution {
            values: wire.values,
            sorted,
            design,
            benchmark_slope: wire.benchmark_slope,
            shift: wire.shift,
            provenance: wire.provenance,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    format_version: u32,
    design: DesignWire,
    benchmark_slope: f64,
    shift: f64,
    values: Vec<f64>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct DesignWire {
    weights_g: Vec<f64>,
    trials: u32,
}

/// One pseudo-subject under the test design:
/// y_jt = a + β · w_j + α* + u*_j + ε*_jt with α* ~ N(0, σ²_α),
/// u*_j ~ N(0, σ²_u), ε*_jt ~ N(0, σ²_ε). Hierarchical sampling gives the
/// stacked vector the compound-symmetry covariance exactly: diagonal
/// σ²_α + σ²_u + σ²_ε, same-condition off-diagonal σ²_α + σ²_u,
/// cross-condition σ²_α, and zero across subjects.
pub fn draw_pseudo_subject<R: Rng>(
    theta: &ModelParams,
    design: &DesignSpec,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    // Unlike fitted draws, a prediction may use a fully degenerate
    // covariance (all variances zero).
    if theta.var_alpha < 0.0 || theta.var_u < 0.0 || theta.var_eps < 0.0 {
        return Err(Error::Validation(
            "variance components must be nonnegative".to_string(),
        ));
    }
    if !theta.grand_intercept.is_finite() || !theta.beta_pop.is_finite() {
        return Err(Error::Validation(
            "model parameters must be finite".to_string(),
        ));
    }
    let alpha = noise(rng, theta.var_alpha);
    let mut out = Vec::with_capacity(design.n_conditions());
    for w in design.weights_kg() {
        let u = noise(rng, theta.var_u);
        let base = theta.grand_intercept + theta.beta_pop * w + alpha + u;
        let trials = (0..design.trials_per_condition())
            .map(|_| base + noise(rng, theta.var_eps))
            .collect();
        out.push(trials);
    }
    Ok(out)
}

fn noise<R: Rng>(rng: &mut R, variance: f64) -> f64 {
    if variance > 0.0 {
        Normal::new(0.0, variance.sqrt())
            .expect("valid normal")
            .sample(rng)
    } else {
        0.0
    }
}

/// Build the null template from posterior draws: for m = 1..M pick the
/// m-th draw (cycling in order), draw one pseudo-subject, and record its
/// naive slope. Construction parallelizes over m with per-index streams,
/// so the result is identical for any worker count.
pub fn build_template(
    post: &PosteriorDraws,
    design: &DesignSpec,
    m: u32,
    seed_value: u64,
) -> Result<TemplateDistribution> {
    build_template_with(post, design, m, seed_value, BenchmarkStat::Mean)
}

pub fn build_template_with(
    post: &PosteriorDraws,
    design: &DesignSpec,
    m: u32,
    seed_value: u64,
    benchmark: BenchmarkStat,
) -> Result<TemplateDistribution> {
    if post.draws.is_empty() {
        return Err(Error::Validation(
            "cannot build a template from an empty posterior".to_string(),
        ));
    }
    if m == 0 {
        return Err(Error::Config("template size M must be >= 1".to_string()));
    }

    let n_draws = post.draws.len();
    let weights = design.weights_kg().to_vec();
    let values: Vec<f64> = (0..m as usize)
        .into_par_iter()
        .map(|i| {
            let theta = &post.draws[i % n_draws].params;
            let mut rng = seed::stream(seed_value, "pseudo-subject", i as u64);
            let outcomes =
                draw_pseudo_subject(theta, design, &mut rng).expect("posterior draws are valid");
            let means: Vec<f64> = outcomes
                .iter()
                .map(|t| t.iter().sum::<f64>() / t.len() as f64)
                .collect();
            estimator::naive_slope_from_means(&weights, &means)
                .expect("design has at least two increasing weights")
        })
        .collect();

    let mut betas: Vec<f64> = post.params().map(|p| p.beta_pop).collect();
    let benchmark_slope = match benchmark {
        BenchmarkStat::Mean => betas.iter().sum::<f64>() / betas.len() as f64,
        BenchmarkStat::Median => {
            betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = betas.len();
            if n % 2 == 1 {
                betas[n / 2]
            } else {
                0.5 * (betas[n / 2 - 1] + betas[n / 2])
            }
        }
    };

    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(TemplateDistribution {
        values,
        sorted,
        design: design.clone(),
        benchmark_slope,
        shift: 0.0,
        provenance: Provenance {
            seed: seed_value,
            chains: post.run.chains,
            draws_per_chain: post.run.draws_per_chain,
            burn_in: post.run.burn_in,
            rhat: post.rhat,
            converged: post.converged,
            recycled: m as usize > n_draws,
            created_utc: created_utc_now(),
        },
    })
}

/// Artifact timestamp; honors SOURCE_DATE_EPOCH so that seeded runs can
/// be byte-identical.
fn created_utc_now() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
        .unwrap_or_else(|| chrono::Utc::now().timestamp());
    chrono::DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}
