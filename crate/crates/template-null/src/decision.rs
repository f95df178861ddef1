//! Clinic-side inference against a template distribution: hypothesis
//! decision, p-value, post-hoc power, overlap error rates, and the
//! physician's chart.
//!
//! Conventions are fixed so the decision rule is coherent: the p-value is
//! the add-one empirical tail probability p = (1 + #{values ≤ β̄})/(M+1),
//! one-sided with small slopes extreme, and the critical value is the
//! ceil(α·M)-th smallest template value. Rejection means p < α, which for
//! the default template size coincides with β̄ < C_α.

use std::fmt;
use std::io::Write;

use crate::data::{Dataset, SubjectTrials};
use crate::error::{Error, Result};
use crate::estimator;
use crate::seed;
use crate::template::TemplateDistribution;

/// Confidence level of the bootstrap slope interval in reports.
pub const CI_LEVEL: f64 = 0.95;
/// Bootstrap replicates behind the reported slope interval.
pub const CI_BOOTSTRAP: u32 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Normal,
    Abnormal,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Normal => write!(f, "NORMAL"),
            Decision::Abnormal => write!(f, "ABNORMAL"),
        }
    }
}

/// One physician's-chart row.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentReport {
    pub subject_id: String,
    pub decision: Decision,
    /// The subject's naive slope β̄.
    pub scaling_factor: f64,
    /// benchmark − β̄; the identity delta_hat + scaling_factor =
    /// benchmark holds by construction.
    pub delta_hat: f64,
    pub p_value: f64,
    /// Power against a deficit of max(delta_hat, 0) at this level.
    pub post_hoc_power: f64,
    pub level: f64,
    /// Percentile bootstrap interval for β̄; absent when no condition
    /// holds repeated trials.
    pub slope_ci: Option<(f64, f64)>,
    /// Provenance reference of the template used.
    pub template_ref: String,
    pub warnings: Vec<String>,
}

/// Add-one empirical tail probability of observing a slope at least as
/// extreme (small) as `beta_bar` under the null template.
pub fn p_value(t: &TemplateDistribution, beta_bar: f64) -> Result<f64> {
    if !t.is_null() {
        return Err(Error::Artifact(
            "p-values are defined against the null template (shift 0)".to_string(),
        ));
    }
    if !beta_bar.is_finite() {
        return Err(Error::Validation("slope must be finite".to_string()));
    }
    let m = t.len() as f64;
    let count = t.sorted_values().partition_point(|v| *v <= beta_bar) as f64;
    Ok((1.0 + count) / (m + 1.0))
}

/// False negative rate by template overlap: the fraction of the
/// δ_alt-shifted template at or above the null critical value.
pub fn fnr_by_overlap(t_null: &TemplateDistribution, delta_alt: f64, level: f64) -> Result<f64> {
    if !t_null.is_null() {
        return Err(Error::Artifact(
            "overlap rates are computed from the null template (shift 0)".to_string(),
        ));
    }
    if !(delta_alt >= 0.0) || !delta_alt.is_finite() {
        return Err(Error::Validation(format!(
            "delta_alt must be nonnegative, got {delta_alt}"
        )));
    }
    let c = t_null.critical_value(level)?;
    let sorted = t_null.sorted_values();
    // (v - delta_alt) >= c  <=>  v >= c + delta_alt
    let below = sorted.partition_point(|v| *v < c + delta_alt);
    Ok((sorted.len() - below) as f64 / sorted.len() as f64)
}

/// Mean and spread of the overlap FNR across replicate trainings: the
/// standard error quoted for a deployed template is the sample standard
/// deviation of the per-template rates.
pub fn error_rate_interval(
    templates: &[TemplateDistribution],
    delta_alt: f64,
    level: f64,
) -> Result<(f64, f64)> {
    if templates.len() < 2 {
        return Err(Error::Validation(
            "error-rate intervals need at least 2 replicate templates".to_string(),
        ));
    }
    let rates = templates
        .iter()
        .map(|t| fnr_by_overlap(t, delta_alt, level))
        .collect::<Result<Vec<f64>>>()?;
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Assess one subject against a template. The subject must cover exactly
/// the template's weight conditions; a differing trial count is a warning
/// (the template is design-specific), not an error.
pub fn assess(
    t: &TemplateDistribution,
    trials: &SubjectTrials,
    level: f64,
    seed_value: u64,
) -> Result<AssessmentReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "test level must lie in (0,1), got {level}"
        )));
    }
    if !t.is_null() {
        return Err(Error::Artifact(
            "assessments run against the null template (shift 0)".to_string(),
        ));
    }
    let design = t.design();
    let weights = trials.weights_kg();
    if weights != design.weights_kg() {
        return Err(Error::DesignMismatch(format!(
            "subject {} was measured at {:?} g but the template was built for {:?} g",
            trials.subject_id(),
            weights.iter().map(|w| w * 1000.0).collect::<Vec<_>>(),
            design.weights_grams()
        )));
    }

    let mut warnings = Vec::new();
    if trials
        .conditions()
        .iter()
        .any(|c| c.outcomes.len() as u32 != design.trials_per_condition())
    {
        warnings.push(format!(
            "trial count differs from the template design ({} per condition)",
            design.trials_per_condition()
        ));
    }
    if !t.decision_ready() {
        warnings.push(format!(
            "template holds only {} draws; decisions want at least {}",
            t.len(),
            crate::template::MIN_DECISION_DRAWS
        ));
    }

    let beta_bar = estimator::naive_slope(trials)?.value;
    let p = p_value(t, beta_bar)?;
    let decision = if p < level {
        Decision::Abnormal
    } else {
        Decision::Normal
    };
    let delta_hat = t.benchmark_slope() - beta_bar;
    let post_hoc_power = 1.0 - fnr_by_overlap(t, delta_hat.max(0.0), level)?;
    let slope_ci = match estimator::slope_ci(trials, CI_LEVEL, CI_BOOTSTRAP, seed_value) {
        Ok(ci) => Some(ci),
        Err(_) => {
            warnings.push(
                "bootstrap interval unavailable: no condition holds repeated trials".to_string(),
            );
            None
        }
    };

    let prov = t.provenance();
    Ok(AssessmentReport {
        subject_id: trials.subject_id().to_string(),
        decision,
        scaling_factor: beta_bar,
        delta_hat,
        p_value: p,
        post_hoc_power,
        level,
        slope_ci,
        template_ref: format!(
            "template(seed={}, created={})",
            prov.seed, prov.created_utc
        ),
        warnings,
    })
}

/// One chart row; `report` is None when the subject did not complete the
/// condition (the N/A case).
#[derive(Debug, Clone, PartialEq)]
pub struct ChartRow {
    pub subject_id: String,
    pub condition: String,
    pub report: Option<AssessmentReport>,
}

/// Assess every subject under every named experimental condition.
/// Subjects run in dataset order, conditions in the given order; a
/// subject missing any weight of a condition's design gets an N/A row.
pub fn physician_chart(
    conditions: &[(String, &TemplateDistribution)],
    subjects: &Dataset,
    level: f64,
    seed_value: u64,
) -> Result<Vec<ChartRow>> {
    let mut rows = Vec::new();
    for (s_idx, sid) in subjects.subject_ids().into_iter().enumerate() {
        for (name, t) in conditions {
            let row = match subjects.subject_trials_for_design(sid, t.design())? {
                Some(trials) => {
                    let child = seed::derive(seed_value, name, s_idx as u64);
                    ChartRow {
                        subject_id: sid.to_string(),
                        condition: name.clone(),
                        report: Some(assess(t, &trials, level, child)?),
                    }
                }
                None => ChartRow {
                    subject_id: sid.to_string(),
                    condition: name.clone(),
                    report: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Chart CSV: `subject,assessment,scaling_factor,delta,p_value,power`,
/// with a `condition` column inserted after `subject` when the chart
/// spans more than one condition. N/A rows leave the numeric cells empty.
pub fn write_chart_csv<W: Write>(
    rows: &[ChartRow],
    multi_condition: bool,
    comment: Option<&str>,
    mut w: W,
) -> Result<()> {
    let to_err = |e: std::io::Error| Error::io("<writer>", e);
    if let Some(c) = comment {
        writeln!(w, "# {c}").map_err(to_err)?;
    }
    if multi_condition {
        writeln!(w, "subject,condition,assessment,scaling_factor,delta,p_value,power")
            .map_err(to_err)?;
    } else {
        writeln!(w, "subject,assessment,scaling_factor,delta,p_value,power").map_err(to_err)?;
    }
    for row in rows {
        let cond = if multi_condition {
            format!("{},", row.condition)
        } else {
            String::new()
        };
        match &row.report {
            Some(r) => writeln!(
                w,
                "{},{}{},{},{},{},{}",
                row.subject_id, cond, r.decision, r.scaling_factor, r.delta_hat, r.p_value,
                r.post_hoc_power
            )
            .map_err(to_err)?,
            None => writeln!(w, "{},{}N/A,,,,", row.subject_id, cond).map_err(to_err)?,
        }
    }
    Ok(())
}

/// Aligned text chart, one row per subject with one column group per
/// condition, mirroring the printed physician's chart.
pub fn format_chart_table(rows: &[ChartRow]) -> String {
    let mut conditions: Vec<&str> = Vec::new();
    let mut subjects: Vec<&str> = Vec::new();
    for r in rows {
        if !conditions.contains(&r.condition.as_str()) {
            conditions.push(&r.condition);
        }
        if !subjects.contains(&r.subject_id.as_str()) {
            subjects.push(&r.subject_id);
        }
    }

    let mut out = String::new();
    let sub_w = subjects
        .iter()
        .map(|s| s.len())
        .max()
        .unwrap_or(7)
        .max("subject".len());
    out.push_str(&format!("{:<sub_w$}", "subject"));
    for c in &conditions {
        out.push_str(&format!(
            " | {:>24}{:>9}{:>9}{:>9}{:>7}",
            format!("[{c}] assessment"),
            "scaling",
            "delta",
            "p",
            "power"
        ));
    }
    out.push('\n');
    for s in &subjects {
        out.push_str(&format!("{s:<sub_w$}"));
        for c in &conditions {
            let row = rows
                .iter()
                .find(|r| r.subject_id == *s && r.condition == *c);
            match row.and_then(|r| r.report.as_ref()) {
                Some(r) => out.push_str(&format!(
                    " | {:>24}{:>9.3}{:>9.3}{:>9.3}{:>7.3}",
                    r.decision.to_string(),
                    r.scaling_factor,
                    r.delta_hat,
                    r.p_value,
                    r.post_hoc_power
                )),
                None => out.push_str(&format!(
                    " | {:>24}{:>9}{:>9}{:>9}{:>7}",
                    "N/A", "--", "--", "--", "--"
                )),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DesignSpec, TrialRecord};

    /// Build a template through the public JSON path.
    fn make_template(
        values: &[f64],
        benchmark: f64,
        weights_g: &[f64],
        trials: u32,
    ) -> TemplateDistribution {
        let json = serde_json::json!({
            "format_version": 1,
            "design": {"weights_g": weights_g, "trials": trials},
            "benchmark_slope": benchmark,
            "shift": 0.0,
            "values": values,
            "provenance": {
                "seed": 42, "chains": 3, "draws_per_chain": 2000, "burn_in": 1000,
                "rhat": {"a": 1.0, "beta_pop": 1.0, "var_alpha": 1.0, "var_u": 1.0, "var_eps": 1.0},
                "converged": true, "recycled": false,
                "created_utc": "2026-01-01T00:00:00Z"
            }
        });
        TemplateDistribution::from_json_reader(json.to_string().as_bytes()).unwrap()
    }

    fn subject_with_slope(slope: f64, weights_kg: &[f64], trials: usize) -> SubjectTrials {
        SubjectTrials::from_conditions(
            "patient".to_string(),
            weights_kg
                .iter()
                .map(|w| (*w, vec![2.8 + slope * w; trials]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn p_value_conventions() {
        let values: Vec<f64> = (1..=999).map(f64::from).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        assert_eq!(p_value(&t, 0.5).unwrap(), 0.001);
        assert_eq!(p_value(&t, 500.0).unwrap(), 0.501);
        assert!((p_value(&t, 500.0).unwrap() - 0.5).abs() < 2.0 / 1000.0);
        assert_eq!(p_value(&t, 1500.0).unwrap(), 1.0);
    }

    #[test]
    fn p_value_needs_null_template() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        let shifted = t.shifted(0.3).unwrap();
        assert!(p_value(&shifted, 0.5).is_err());
    }

    #[test]
    fn overlap_fnr_base_cases() {
        let m = 3000;
        let values: Vec<f64> = (1..=m).map(|v| v as f64 / m as f64).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        for level in [0.05, 0.10] {
            let fnr = fnr_by_overlap(&t, 0.0, level).unwrap();
            assert!(
                (fnr - (1.0 - level)).abs() <= 1.0 / m as f64 + 1e-12,
                "fnr {fnr} at level {level}"
            );
        }
        // Total separation.
        assert_eq!(fnr_by_overlap(&t, 10.0, 0.05).unwrap(), 0.0);
        // Monotone in delta and in level.
        let mut prev = 1.0;
        for d in [0.0, 0.1, 0.2, 0.5, 0.9] {
            let f = fnr_by_overlap(&t, d, 0.05).unwrap();
            assert!(f <= prev + 1e-12);
            prev = f;
        }
        assert!(
            fnr_by_overlap(&t, 0.2, 0.10).unwrap() <= fnr_by_overlap(&t, 0.2, 0.05).unwrap()
        );
        assert!(fnr_by_overlap(&t, -0.1, 0.05).is_err());
    }

    #[test]
    fn error_rate_interval_across_templates() {
        let values: Vec<f64> = (1..=1000).map(|v| v as f64 / 1000.0).collect();
        let t1 = make_template(&values, 1.4, &[250.0, 500.0], 5);
        let t2 = t1.clone();
        let (mean, se) = error_rate_interval(&[t1.clone(), t2], 0.2, 0.05).unwrap();
        assert_eq!(se, 0.0);
        assert!((mean - fnr_by_overlap(&t1, 0.2, 0.05).unwrap()).abs() < 1e-12);
        assert!(error_rate_interval(&[t1], 0.2, 0.05).is_err());
    }

    #[test]
    fn assess_null_self_consistency() {
        // Symmetric template around the benchmark 1.4.
        let m = 2999;
        let values: Vec<f64> = (0..m)
            .map(|i| 0.4 + 2.0 * i as f64 / (m - 1) as f64)
            .collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        let subject = subject_with_slope(1.4, &[0.25, 0.5], 5);
        let r = assess(&t, &subject, 0.05, 7).unwrap();
        assert_eq!(r.decision, Decision::Normal);
        assert!((r.delta_hat).abs() < 1e-12);
        assert!((r.delta_hat + r.scaling_factor - 1.4).abs() < 1e-12);
        assert!(
            (r.post_hoc_power - 0.05).abs() < 0.01,
            "power {}",
            r.post_hoc_power
        );
        assert!((r.p_value - 0.5).abs() < 0.01);
        // Degenerate outcomes give a degenerate interval.
        let (lo, hi) = r.slope_ci.unwrap();
        assert_eq!(lo, hi);
        assert!((lo - 1.4).abs() < 1e-12);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }

    #[test]
    fn assess_rejects_design_mismatch_and_warns_on_trials() {
        let values: Vec<f64> = (1..=2000).map(|v| v as f64 / 1000.0).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);

        let wrong = subject_with_slope(1.4, &[0.25, 0.75], 5);
        assert!(matches!(
            assess(&t, &wrong, 0.05, 1),
            Err(Error::DesignMismatch(_))
        ));

        let fewer = subject_with_slope(1.4, &[0.25, 0.5], 3);
        let r = assess(&t, &fewer, 0.05, 1).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("trial count")));
    }

    #[test]
    fn decision_matches_critical_value_rule() {
        // Sweep slopes across the order statistics of a template sized so
        // that ceil(alpha*M) and the add-one p-value agree.
        let m = 3000;
        let values: Vec<f64> = (1..=m).map(|v| v as f64 / m as f64).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        for level in [0.05, 0.10] {
            let c = t.critical_value(level).unwrap();
            for k in [1usize, 2, 149, 150, 151, 299, 300, 301, 2999, 3000] {
                let v = values[k - 1];
                for beta in [v - 1e-9, v, v + 1e-9] {
                    let p = p_value(&t, beta).unwrap();
                    assert_eq!(
                        p < level,
                        beta < c,
                        "level {level}, beta {beta}, p {p}, c {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn chart_pads_missing_conditions() {
        let values: Vec<f64> = (1..=1200).map(|v| v as f64 / 600.0 - 0.5).collect();
        let t_one = make_template(&values, 1.4, &[550.0, 800.0], 4);
        let t_two = make_template(&values, 1.4, &[350.0, 600.0], 4);

        let mut records = Vec::new();
        for s in 1..=22 {
            let sid = format!("p{s:02}");
            for w in [0.55, 0.8] {
                for trial in 1..=4u32 {
                    records.push(TrialRecord {
                        subject_id: sid.clone(),
                        condition_weight: w,
                        trial_index: trial,
                        outcome: 2.8 + 1.2 * w + 0.01 * trial as f64,
                    });
                }
            }
            if s <= 18 {
                for w in [0.35, 0.6] {
                    for trial in 1..=4u32 {
                        records.push(TrialRecord {
                            subject_id: sid.clone(),
                            condition_weight: w,
                            trial_index: trial,
                            outcome: 2.8 + 1.3 * w + 0.01 * trial as f64,
                        });
                    }
                }
            }
        }
        let data = Dataset::new(records, None).unwrap();
        let conditions = vec![("one".to_string(), &t_one), ("two".to_string(), &t_two)];
        let rows = physician_chart(&conditions, &data, 0.10, 99).unwrap();
        assert_eq!(rows.len(), 44);
        let one: Vec<_> = rows.iter().filter(|r| r.condition == "one").collect();
        let two: Vec<_> = rows.iter().filter(|r| r.condition == "two").collect();
        assert_eq!(one.iter().filter(|r| r.report.is_some()).count(), 22);
        assert_eq!(two.iter().filter(|r| r.report.is_some()).count(), 18);
        assert_eq!(two.iter().filter(|r| r.report.is_none()).count(), 4);
        // Per-row coherence: ABNORMAL implies p < level.
        for r in rows.iter().filter_map(|r| r.report.as_ref()) {
            assert_eq!(r.decision == Decision::Abnormal, r.p_value < r.level);
        }

        let mut csv = Vec::new();
        write_chart_csv(&rows, true, Some("test"), &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("# test\nsubject,condition,assessment,"));
        assert_eq!(text.lines().count(), 2 + 44);
        assert!(text.contains("p19,two,N/A,,,,"));

        let table = format_chart_table(&rows);
        assert!(table.contains("one"));
        assert!(table.lines().count() >= 23);
    }

    #[test]
    fn empty_chart_for_empty_dataset() {
        let design = DesignSpec::from_grams(&[250.0, 500.0], 5).unwrap();
        let data = Dataset::new(Vec::new(), Some(design)).unwrap();
        let values: Vec<f64> = (1..=1000).map(f64::from).collect();
        let t = make_template(&values, 1.4, &[250.0, 500.0], 5);
        let rows = physician_chart(&[("one".to_string(), &t)], &data, 0.1, 1).unwrap();
        assert!(rows.is_empty());
    }
}
