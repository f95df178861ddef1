//! Simulation laboratory: the data-generating process, the error-rate
//! table for Tests A/B/B*/C, and the power/design study.
//!
//! Test A builds the gold-standard sampling distribution of the naive
//! slope from the known truth. Test B fits replicate training cohorts,
//! builds a template per replicate, and scores independently simulated
//! test subjects against each template; Test B* estimates the same rates
//! from template overlap alone. Test C fits the joint model per
//! (training set, test subject) pair and rejects when the posterior
//! probability of δ ≤ 0 drops below the level.
//!
//! Every replicate is keyed by (master seed, purpose, index), so tables
//! are reproducible for a fixed seed under any parallel schedule. In the
//! δ_alt = 0 row the cells are false positive rates; in the remaining
//! rows false negative rates.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bayes;
use crate::config::PriorConfig;
use crate::config::RunConfig;
use crate::data::{Dataset, DesignSpec, ModelParams, TrialRecord};
use crate::decision;
use crate::error::{Error, Result};
use crate::estimator;
use crate::seed;
use crate::template::{self, TemplateDistribution};

/// Truth used throughout the reference simulations:
/// a = 2.8, β_pop = 1.4, σ_α = 0.3, σ_u = 0.1, σ_ε = 0.2.
pub fn reference_truth() -> ModelParams {
    ModelParams {
        grand_intercept: 2.8,
        beta_pop: 1.4,
        var_alpha: 0.09,
        var_u: 0.01,
        var_eps: 0.04,
    }
}

/// Reference training design: 10 weights, 250–700 g in 50 g steps,
/// 6 trials per condition after the discarded practice trial.
pub fn reference_train_design() -> DesignSpec {
    let grams: Vec<f64> = (0..10).map(|k| 250.0 + 50.0 * k as f64).collect();
    DesignSpec::from_grams(&grams, 6).expect("valid reference design")
}

/// A complete simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub truth: ModelParams,
    pub train_design: DesignSpec,
    pub n_train_subjects: u32,
    pub test_design: DesignSpec,
    /// Hypothesized deficits; must contain 0 (the null row).
    pub delta_grid: Vec<f64>,
    pub levels: Vec<f64>,
    /// Test replicates per cell.
    pub replicates: u32,
    pub seed: u64,
}

impl SimScenario {
    /// Scenario one: the test subject lifts 250 g and 500 g, 5 trials.
    pub fn one(seed_value: u64) -> SimScenario {
        SimScenario {
            truth: reference_truth(),
            train_design: reference_train_design(),
            n_train_subjects: 10,
            test_design: DesignSpec::from_grams(&[250.0, 500.0], 5).unwrap(),
            delta_grid: default_delta_grid(),
            levels: vec![0.05, 0.10],
            replicates: 500,
            seed: seed_value,
        }
    }

    /// Scenario two: the test subject lifts 250, 500 and 750 g, 5 trials.
    pub fn two(seed_value: u64) -> SimScenario {
        SimScenario {
            test_design: DesignSpec::from_grams(&[250.0, 500.0, 750.0], 5).unwrap(),
            ..SimScenario::one(seed_value)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_grid.contains(&0.0) {
            return Err(Error::Config(
                "the delta grid must contain 0 (the null row)".to_string(),
            ));
        }
        if self.delta_grid.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Config(
                "delta values must be finite and nonnegative".to_string(),
            ));
        }
        if self.levels.is_empty()
            || self.levels.iter().any(|l| !(l > &0.0 && l < &1.0))
        {
            return Err(Error::Config(
                "levels must lie strictly inside (0,1)".to_string(),
            ));
        }
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be >= 1".to_string()));
        }
        if self.n_train_subjects < 2 {
            return Err(Error::Config(
                "at least 2 training subjects are required".to_string(),
            ));
        }
        self.truth.validate()
    }

    /// Parse a custom scenario file: flat key=value lines with keys
    /// a, beta_pop, sigma_alpha, sigma_u, sigma_eps, train_subjects,
    /// train_design, test_design, delta_grid. Unset keys keep the
    /// scenario-one defaults.
    pub fn from_config_str(text: &str, label: &str, seed_value: u64) -> Result<SimScenario> {
        let mut scn = SimScenario::one(seed_value);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse {
                path: label.to_string(),
                line: i as u64 + 1,
                message: m,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".to_string()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad {what} value '{value}'")))
            };
            match key {
                "a" => scn.truth.grand_intercept = num("a")?,
                "beta_pop" => scn.truth.beta_pop = num("beta_pop")?,
                "sigma_alpha" => scn.truth.var_alpha = num("sigma_alpha")?.powi(2),
                "sigma_u" => scn.truth.var_u = num("sigma_u")?.powi(2),
                "sigma_eps" => scn.truth.var_eps = num("sigma_eps")?.powi(2),
                "train_subjects" => {
                    scn.n_train_subjects = value
                        .parse()
                        .map_err(|_| err(format!("bad train_subjects '{value}'")))?
                }
                "train_design" => scn.train_design = DesignSpec::parse(value)?,
                "test_design" => scn.test_design = DesignSpec::parse(value)?,
                "delta_grid" => scn.delta_grid = parse_delta_grid(value)?,
                other => return Err(err(format!("unknown scenario key '{other}'"))),
            }
        }
        scn.validate()?;
        Ok(scn)
    }

    pub fn from_config_file(path: &Path, seed_value: u64) -> Result<SimScenario> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_config_str(&text, &path.display().to_string(), seed_value)
    }
}

/// The reference alternative grid 0.0, 0.1, …, 1.3.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=13).map(|k| k as f64 / 10.0).collect()
}

/// Parse a δ grid: either `start:end:step` or a comma list.
pub fn parse_delta_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Config(m);
    let parse_one = |p: &str| -> Result<f64> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("bad delta value '{}'", p.trim())))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if parts.len() == 3 {
        let (start, end, step) = (parse_one(parts[0])?, parse_one(parts[1])?, parse_one(parts[2])?);
        if step <= 0.0 || end < start {
            return Err(bad(format!("bad delta range '{s}'")));
        }
        let n = ((end - start) / step).round() as usize;
        // Round to 9 decimals so human-scale grids print cleanly.
        (0..=n)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else if parts.len() == 1 {
        s.split(',').map(parse_one).collect::<Result<Vec<_>>>()?
    } else {
        return Err(bad(format!("bad delta grid '{s}'")));
    };
    if grid.is_empty() {
        return Err(bad("empty delta grid".to_string()));
    }
    Ok(grid)
}

/// Simulate one subject from the hierarchical model, with the population
/// slope replaced by `beta_override` when given.
pub fn simulate_subject(
    truth: &ModelParams,
    design: &DesignSpec,
    beta_override: Option<f64>,
    rng: &mut ChaCha8Rng,
    subject_id: &str,
) -> Result<Dataset> {
    let theta = ModelParams {
        beta_pop: beta_override.unwrap_or(truth.beta_pop),
        ..*truth
    };
    let outcomes = template::draw_pseudo_subject(&theta, design, rng)?;
    let mut records = Vec::new();
    for (j, w) in design.weights_kg().iter().enumerate() {
        for (t, y) in outcomes[j].iter().enumerate() {
            records.push(TrialRecord {
                subject_id: subject_id.to_string(),
                condition_weight: *w,
                trial_index: t as u32 + 1,
                outcome: *y,
            });
        }
    }
    Dataset::new(records, Some(design.clone()))
}

/// Simulate a cohort of subjects (ids s0, s1, …) under a shared design.
pub fn simulate_cohort(
    truth: &ModelParams,
    design: &DesignSpec,
    n_subjects: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    let mut records = Vec::new();
    for s in 0..n_subjects {
        let one = simulate_subject(truth, design, None, rng, &format!("s{s}"))?;
        records.extend(one.records().iter().cloned());
    }
    Dataset::new(records, Some(design.clone()))
}

/// Draw one subject and return its naive slope directly.
fn simulated_slope(
    truth: &ModelParams,
    design: &DesignSpec,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let theta = ModelParams {
        beta_pop: beta,
        ..*truth
    };
    let outcomes = template::draw_pseudo_subject(&theta, design, rng).expect("valid truth");
    let means: Vec<f64> = outcomes
        .iter()
        .map(|t| t.iter().sum::<f64>() / t.len() as f64)
        .collect();
    estimator::naive_slope_from_means(design.weights_kg(), &means).expect("valid design")
}

/// One table cell: a rate and its binomial Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCell {
    pub rate: f64,
    pub se: f64,
}

impl RateCell {
    fn binomial(rate: f64, n: f64) -> RateCell {
        RateCell {
            rate,
            se: (rate * (1.0 - rate) / n).sqrt(),
        }
    }
}

/// Rates indexed `[level][delta]`.
pub type RateGrid = Vec<Vec<RateCell>>;

fn slope_pool(scn: &SimScenario, tag: &str, delta: f64, delta_idx: usize) -> Vec<f64> {
    let beta = scn.truth.beta_pop - delta;
    (0..scn.replicates)
        .into_par_iter()
        .map(|r| {
            let key = ((delta_idx as u64) << 32) | u64::from(r);
            let mut rng = seed::stream(scn.seed, tag, key);
            simulated_slope(&scn.truth, &scn.test_design, beta, &mut rng)
        })
        .collect()
}

/// Test A: the gold standard. The null distribution of the naive slope
/// is simulated from the truth; the δ = 0 row is the level by
/// construction (the critical value is a percentile of that same
/// distribution), alternatives are scored on fresh subjects.
pub fn run_test_a(scn: &SimScenario) -> Result<RateGrid> {
    scn.validate()?;
    let mut null_pool = slope_pool(scn, "testA-null", 0.0, usize::MAX >> 33);
    null_pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let criticals: Vec<f64> = scn
        .levels
        .iter()
        .map(|lvl| estimator::lower_quantile(&null_pool, *lvl))
        .collect();

    let mut grid = vec![Vec::with_capacity(scn.delta_grid.len()); scn.levels.len()];
    for (d_idx, delta) in scn.delta_grid.iter().enumerate() {
        if *delta == 0.0 {
            for (l_idx, lvl) in scn.levels.iter().enumerate() {
                grid[l_idx].push(RateCell { rate: *lvl, se: 0.0 });
            }
            continue;
        }
        let pool = slope_pool(scn, "testA-alt", *delta, d_idx);
        for (l_idx, c) in criticals.iter().enumerate() {
            let rejected = pool.iter().filter(|s| **s < *c).count() as f64;
            let fnr = 1.0 - rejected / pool.len() as f64;
            grid[l_idx].push(RateCell::binomial(fnr, pool.len() as f64));
        }
    }
    Ok(grid)
}

/// Everything Test B produces: decision rates against simulated subjects
/// (B), overlap rates (B*), and the spread of the per-template overlap
/// rates across replicate trainings.
#[derive(Debug, Clone)]
pub struct TestBOutput {
    pub test_b: RateGrid,
    pub test_bstar: RateGrid,
    /// Standard deviation across templates of the per-template overlap
    /// rate, indexed like the grids.
    pub spread_bstar: Vec<Vec<f64>>,
    pub n_templates: u32,
    pub n_excluded: u32,
    pub templates: Vec<TemplateDistribution>,
}

/// Test B / B*: replicate trainings, one template per training.
/// Templates flagged as non-converged are excluded and counted.
pub fn run_test_b(
    scn: &SimScenario,
    n_templates: u32,
    priors: &PriorConfig,
    run: &RunConfig,
) -> Result<TestBOutput> {
    scn.validate()?;
    if n_templates < 1 {
        return Err(Error::Config("n_templates must be >= 1".to_string()));
    }

    let all: Vec<TemplateDistribution> = (0..n_templates)
        .into_par_iter()
        .map(|k| -> Result<TemplateDistribution> {
            let mut rng = seed::stream(scn.seed, "testB-train", u64::from(k));
            let train =
                simulate_cohort(&scn.truth, &scn.train_design, scn.n_train_subjects, &mut rng)?;
            let run_k = RunConfig {
                seed: seed::derive(scn.seed, "testB-fit", u64::from(k)),
                ..*run
            };
            let fit = bayes::fit_training(&train, priors, &run_k)?;
            template::build_template(
                &fit,
                &scn.test_design,
                run.template_draws,
                seed::derive(scn.seed, "testB-template", u64::from(k)),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let (templates, excluded): (Vec<_>, Vec<_>) =
        all.into_iter().partition(|t| t.provenance().converged);
    if templates.is_empty() {
        return Err(Error::Sampler(
            "every replicate training fit was flagged as non-converged".to_string(),
        ));
    }
    let n_excluded = excluded.len() as u32;

    let mut test_b: RateGrid = vec![Vec::new(); scn.levels.len()];
    let mut test_bstar: RateGrid = vec![Vec::new(); scn.levels.len()];
    let mut spread: Vec<Vec<f64>> = vec![Vec::new(); scn.levels.len()];

    for (d_idx, delta) in scn.delta_grid.iter().enumerate() {
        let pool = slope_pool(scn, "testB-subject", *delta, d_idx);
        for (l_idx, lvl) in scn.levels.iter().enumerate() {
            // Column B: decisions on simulated subjects, averaged over
            // templates.
            let mut rejected = 0usize;
            for t in &templates {
                let c = t.critical_value(*lvl)?;
                rejected += pool.iter().filter(|s| **s < c).count();
            }
            let rej_rate = rejected as f64 / (pool.len() * templates.len()) as f64;
            let b_rate = if *delta == 0.0 { rej_rate } else { 1.0 - rej_rate };
            test_b[l_idx].push(RateCell::binomial(b_rate, pool.len() as f64));

            // Column B*: overlap rates, averaged over templates.
            let per_template: Vec<f64> = templates
                .iter()
                .map(|t| decision::fnr_by_overlap(t, *delta, *lvl))
                .collect::<Result<Vec<_>>>()?;
            let mean_fnr =
                per_template.iter().sum::<f64>() / per_template.len() as f64;
            let bstar_rate = if *delta == 0.0 { 1.0 - mean_fnr } else { mean_fnr };
            let m = templates[0].len() as f64;
            test_bstar[l_idx].push(RateCell::binomial(bstar_rate, m));

            let spread_rates: Vec<f64> = per_template
                .iter()
                .map(|f| if *delta == 0.0 { 1.0 - f } else { *f })
                .collect();
            spread[l_idx].push(sd(&spread_rates));
        }
    }

    Ok(TestBOutput {
        test_b,
        test_bstar,
        spread_bstar: spread,
        n_templates: templates.len() as u32,
        n_excluded,
        templates,
    })
}

/// Test C output: posterior-probability test rates plus the count of
/// joint fits flagged as non-converged (flagged fits still contribute,
/// matching how the test would behave in use).
#[derive(Debug, Clone)]
pub struct TestCOutput {
    pub rates: RateGrid,
    pub n_fits: u32,
    pub n_flagged: u32,
}

/// Test C: per replicate, fit the joint model on a fresh (training,
/// test subject) pair and reject when P(δ ≤ 0 | data) < α.
pub fn run_test_c(scn: &SimScenario, priors: &PriorConfig, run: &RunConfig) -> Result<TestCOutput> {
    scn.validate()?;

    let mut rates: RateGrid = vec![Vec::new(); scn.levels.len()];
    let mut n_flagged = 0u32;
    let mut n_fits = 0u32;
    for (d_idx, delta) in scn.delta_grid.iter().enumerate() {
        let beta_test = scn.truth.beta_pop - delta;
        let results: Vec<(f64, bool)> = (0..scn.replicates)
            .into_par_iter()
            .map(|r| -> Result<(f64, bool)> {
                let key = ((d_idx as u64) << 32) | u64::from(r);
                let mut train_rng = seed::stream(scn.seed, "testC-train", key);
                let train = simulate_cohort(
                    &scn.truth,
                    &scn.train_design,
                    scn.n_train_subjects,
                    &mut train_rng,
                )?;
                let mut test_rng = seed::stream(scn.seed, "testC-test", key);
                let test = simulate_subject(
                    &scn.truth,
                    &scn.test_design,
                    Some(beta_test),
                    &mut test_rng,
                    "test-subject",
                )?;
                let run_r = RunConfig {
                    seed: seed::derive(scn.seed, "testC-fit", key),
                    ..*run
                };
                let joint = bayes::fit_joint(&train, &test, priors, &run_r)?;
                Ok((joint.posterior_prob_delta_leq_zero(), !joint.converged))
            })
            .collect::<Result<Vec<_>>>()?;

        n_fits += results.len() as u32;
        n_flagged += results.iter().filter(|(_, flagged)| *flagged).count() as u32;
        for (l_idx, lvl) in scn.levels.iter().enumerate() {
            let rejected = results.iter().filter(|(p, _)| p < lvl).count() as f64;
            let rej_rate = rejected / results.len() as f64;
            let rate = if *delta == 0.0 { rej_rate } else { 1.0 - rej_rate };
            rates[l_idx].push(RateCell::binomial(rate, results.len() as f64));
        }
    }

    Ok(TestCOutput {
        rates,
        n_fits,
        n_flagged,
    })
}

/// The assembled error-rate table for one scenario.
#[derive(Debug, Clone)]
pub struct ErrorRateTable {
    pub scenario: String,
    pub levels: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub test_a: RateGrid,
    pub test_b: RateGrid,
    pub test_bstar: RateGrid,
    pub test_c: RateGrid,
    pub n_templates: u32,
    pub n_excluded_templates: u32,
    pub n_joint_fits: u32,
    pub n_flagged_joint_fits: u32,
}

/// Run the full table (Tests A, B, B*, C) for one scenario.
pub fn run_full_table(
    scn: &SimScenario,
    scenario_name: &str,
    n_templates: u32,
    priors: &PriorConfig,
    run: &RunConfig,
) -> Result<ErrorRateTable> {
    let test_a = run_test_a(scn)?;
    let b = run_test_b(scn, n_templates, priors, run)?;
    let c = run_test_c(scn, priors, run)?;
    Ok(ErrorRateTable {
        scenario: scenario_name.to_string(),
        levels: scn.levels.clone(),
        delta_grid: scn.delta_grid.clone(),
        test_a,
        test_b: b.test_b,
        test_bstar: b.test_bstar,
        test_c: c.rates,
        n_templates: b.n_templates,
        n_excluded_templates: b.n_excluded,
        n_joint_fits: c.n_fits,
        n_flagged_joint_fits: c.n_flagged,
    })
}

/// Table CSV, level blocks by δ rows:
/// `level,delta_alt,test_a,test_a_se,...,test_c,test_c_se`.
pub fn write_table_csv<W: std::io::Write>(
    table: &ErrorRateTable,
    comment: Option<&str>,
    mut w: W,
) -> Result<()> {
    let to_err = |e: std::io::Error| Error::io("<writer>", e);
    if let Some(c) = comment {
        writeln!(w, "# {c}").map_err(to_err)?;
    }
    writeln!(
        w,
        "scenario,level,delta_alt,test_a,test_a_se,test_b,test_b_se,\
         test_bstar,test_bstar_se,test_c,test_c_se"
    )
    .map_err(to_err)?;
    for (l_idx, lvl) in table.levels.iter().enumerate() {
        for (d_idx, delta) in table.delta_grid.iter().enumerate() {
            let a = table.test_a[l_idx][d_idx];
            let b = table.test_b[l_idx][d_idx];
            let bs = table.test_bstar[l_idx][d_idx];
            let c = table.test_c[l_idx][d_idx];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                table.scenario,
                lvl,
                delta,
                a.rate,
                a.se,
                b.rate,
                b.se,
                bs.rate,
                bs.se,
                c.rate,
                c.se
            )
            .map_err(to_err)?;
        }
    }
    Ok(())
}

/// One power-curve point; `se` is the standard error of the mean across
/// estimation runs (NaN when a single run was requested).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub delta_alt: f64,
    pub power: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct PowerCurve {
    pub design: DesignSpec,
    pub points: Vec<PowerPoint>,
}

/// Power/design study: for each estimation run, fit one training cohort
/// and build one template per candidate design; power at each δ is
/// 1 − FNR by overlap, averaged over runs.
#[allow(clippy::too_many_arguments)]
pub fn power_study(
    designs: &[DesignSpec],
    truth: &ModelParams,
    train_design: &DesignSpec,
    n_train_subjects: u32,
    delta_grid: &[f64],
    level: f64,
    n_runs: u32,
    seed_value: u64,
    priors: &PriorConfig,
    run: &RunConfig,
) -> Result<Vec<PowerCurve>> {
    if designs.is_empty() {
        return Err(Error::Config("no candidate designs given".to_string()));
    }
    if n_runs < 1 {
        return Err(Error::Config("n_runs must be >= 1".to_string()));
    }
    if delta_grid.is_empty() || delta_grid.iter().any(|d| *d < 0.0 || !d.is_finite()) {
        return Err(Error::Config(
            "delta grid must be nonempty and nonnegative".to_string(),
        ));
    }
    truth.validate()?;

    // powers[run][design][delta]
    let powers: Vec<Vec<Vec<f64>>> = (0..n_runs)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<f64>>> {
            let mut rng = seed::stream(seed_value, "power-train", u64::from(r));
            let train = simulate_cohort(truth, train_design, n_train_subjects, &mut rng)?;
            let run_r = RunConfig {
                seed: seed::derive(seed_value, "power-fit", u64::from(r)),
                ..*run
            };
            let fit = bayes::fit_training(&train, priors, &run_r)?;
            designs
                .iter()
                .enumerate()
                .map(|(d_idx, design)| {
                    let t = template::build_template(
                        &fit,
                        design,
                        run.template_draws,
                        seed::derive(
                            seed_value,
                            "power-template",
                            (u64::from(r) << 16) | d_idx as u64,
                        ),
                    )?;
                    delta_grid
                        .iter()
                        .map(|delta| Ok(1.0 - decision::fnr_by_overlap(&t, *delta, level)?))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::with_capacity(designs.len());
    for (d_idx, design) in designs.iter().enumerate() {
        let mut points = Vec::with_capacity(delta_grid.len());
        for (g_idx, delta) in delta_grid.iter().enumerate() {
            let per_run: Vec<f64> = powers.iter().map(|p| p[d_idx][g_idx]).collect();
            let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
            let se = if per_run.len() > 1 {
                sd(&per_run) / (per_run.len() as f64).sqrt()
            } else {
                f64::NAN
            };
            points.push(PowerPoint {
                delta_alt: *delta,
                power: mean,
                se,
            });
        }
        curves.push(PowerCurve {
            design: design.clone(),
            points,
        });
    }
    Ok(curves)
}

/// Long-format power CSV: `design,delta_alt,power,se` (se empty for a
/// single run).
pub fn write_power_csv<W: std::io::Write>(
    curves: &[PowerCurve],
    comment: Option<&str>,
    mut w: W,
) -> Result<()> {
    let to_err = |e: std::io::Error| Error::io("<writer>", e);
    if let Some(c) = comment {
        writeln!(w, "# {c}").map_err(to_err)?;
    }
    writeln!(w, "design,delta_alt,power,se").map_err(to_err)?;
    for curve in curves {
        for p in &curve.points {
            let se = if p.se.is_nan() {
                String::new()
            } else {
                format!("{}", p.se)
            };
            writeln!(w, "\"{}\",{},{},{}", curve.design, p.delta_alt, p.power, se)
                .map_err(to_err)?;
        }
    }
    Ok(())
}

fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}
