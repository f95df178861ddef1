//! Domain types and dataset ingestion.
//!
//! Masses are stored in kilograms internally so that slopes are expressed
//! per 1000 grams; trial files carry grams. Outcomes are always stored on
//! the log scale (log peak load-force rate).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One observed lift.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub subject_id: String,
    /// Condition mass in kilograms (> 0).
    pub condition_weight: f64,
    /// 1-based trial index within the condition.
    pub trial_index: u32,
    /// Log peak load-force rate.
    pub outcome: f64,
}

/// A weight/trial layout: condition masses in kilograms (strictly
/// increasing, at least two) and the nominal number of trials per condition.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    weights: Vec<f64>,
    trials_per_condition: u32,
}

impl DesignSpec {
    pub fn new(weights_kg: Vec<f64>, trials_per_condition: u32) -> Result<Self> {
        if weights_kg.len() < 2 {
            return Err(Error::Design(format!(
                "a design needs at least 2 weight conditions, got {}",
                weights_kg.len()
            )));
        }
        for w in &weights_kg {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::Design(format!("weights must be positive, got {w}")));
            }
        }
        if !weights_kg.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::Design(
                "weights must be strictly increasing".to_string(),
            ));
        }
        if trials_per_condition == 0 {
            return Err(Error::Design(
                "trials per condition must be at least 1".to_string(),
            ));
        }
        Ok(DesignSpec {
            weights: weights_kg,
            trials_per_condition,
        })
    }

    pub fn from_grams(weights_g: &[f64], trials_per_condition: u32) -> Result<Self> {
        Self::new(
            weights_g.iter().map(|g| g / 1000.0).collect(),
            trials_per_condition,
        )
    }

    /// Parse the CLI design grammar, e.g. `"250,500g x 5"` (grams, then
    /// trials per condition after `x`).
    pub fn parse(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Design(format!("cannot parse design '{s}': {msg}"));
        let (left, right) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| err("expected '<w1,w2,...>g x <trials>'"))?;
        let trials: u32 = right
            .trim()
            .parse()
            .map_err(|_| err("trial count must be a positive integer"))?;
        let left = left.trim();
        let left = left.strip_suffix('g').unwrap_or(left).trim();
        let mut grams = Vec::new();
        for part in left.split(',') {
            let g: f64 = part
                .trim()
                .parse()
                .map_err(|_| err(&format!("bad weight '{}'", part.trim())))?;
            grams.push(g);
        }
        Self::from_grams(&grams, trials)
    }

    pub fn weights_kg(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_grams(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w * 1000.0).collect()
    }

    pub fn trials_per_condition(&self) -> u32 {
        self.trials_per_condition
    }

    pub fn n_conditions(&self) -> usize {
        self.weights.len()
    }

    pub fn contains_weight(&self, weight_kg: f64) -> bool {
        self.weights.contains(&weight_kg)
    }

    /// True when both designs use the identical weight list (trial counts
    /// may differ).
    pub fn same_weights(&self, other: &DesignSpec) -> bool {
        self.weights == other.weights
    }
}

impl std::fmt::Display for DesignSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = String::new();
        for (i, g) in self.weights_grams().iter().enumerate() {
            if i > 0 {
                parts.push(',');
            }
            let _ = write!(parts, "{g}");
        }
        write!(f, "{parts}g x {}", self.trials_per_condition)
    }
}

/// One draw of the model parameters
/// Θ = (a, β_pop, σ²_α, σ²_u, σ²_ε).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Grand intercept `a` (log N/ms).
    pub grand_intercept: f64,
    /// Population scaling factor (log-N/ms per kg).
    pub beta_pop: f64,
    /// Between-subject intercept variance σ²_α.
    pub var_alpha: f64,
    /// Subject-weight effect variance σ²_u.
    pub var_u: f64,
    /// Residual variance σ²_ε.
    pub var_eps: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.grand_intercept.is_finite() && self.beta_pop.is_finite();
        if !finite {
            return Err(Error::Validation(
                "model parameters must be finite".to_string(),
            ));
        }
        if self.var_alpha < 0.0 || self.var_u < 0.0 {
            return Err(Error::Validation(
                "variance components must be nonnegative".to_string(),
            ));
        }
        if !(self.var_eps > 0.0) {
            return Err(Error::Validation(
                "residual variance must be strictly positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// A validated set of trials together with the declared (or inferred)
/// design. Per (subject, weight) cell the trial indices run 1..T' with
/// T' at most the design's trial count; incomplete cells are allowed and
/// flagged as unbalanced.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<TrialRecord>,
    design: DesignSpec,
    balanced: bool,
    warnings: Vec<String>,
}

impl Dataset {
    pub fn new(records: Vec<TrialRecord>, declared_design: Option<DesignSpec>) -> Result<Self> {
        for r in &records {
            if !r.condition_weight.is_finite() || r.condition_weight <= 0.0 {
                return Err(Error::Validation(format!(
                    "subject {}: condition weight must be positive, got {}",
                    r.subject_id, r.condition_weight
                )));
            }
            if !r.outcome.is_finite() {
                return Err(Error::Validation(format!(
                    "subject {}: outcome must be finite",
                    r.subject_id
                )));
            }
            if r.trial_index == 0 {
                return Err(Error::Validation(format!(
                    "subject {}: trial index must be >= 1",
                    r.subject_id
                )));
            }
        }

        let mut seen: HashSet<(&str, u64, u32)> = HashSet::new();
        for r in &records {
            let key = (
                r.subject_id.as_str(),
                r.condition_weight.to_bits(),
                r.trial_index,
            );
            if !seen.insert(key) {
                return Err(Error::Validation(format!(
                    "duplicate trial: subject {}, weight {} g, trial {}",
                    r.subject_id,
                    r.condition_weight * 1000.0,
                    r.trial_index
                )));
            }
        }

        // Per-cell trial indices must form a contiguous 1..T' range.
        let mut cells: BTreeMap<(&str, u64), Vec<u32>> = BTreeMap::new();
        for r in &records {
            cells
                .entry((r.subject_id.as_str(), r.condition_weight.to_bits()))
                .or_default()
                .push(r.trial_index);
        }
        let mut max_trials: u32 = 0;
        for ((sid, wbits), idx) in &mut cells {
            idx.sort_unstable();
            for (pos, t) in idx.iter().enumerate() {
                if *t != pos as u32 + 1 {
                    return Err(Error::Validation(format!(
                        "subject {}, weight {} g: trial indices must run 1..T' \
                         without gaps, got {:?}",
                        sid,
                        f64::from_bits(*wbits) * 1000.0,
                        idx
                    )));
                }
            }
            max_trials = max_trials.max(idx.len() as u32);
        }

        let design = match declared_design {
            Some(d) => {
                for r in &records {
                    if !d.contains_weight(r.condition_weight) {
                        return Err(Error::Validation(format!(
                            "subject {}: weight {} g is not part of the declared design {}",
                            r.subject_id,
                            r.condition_weight * 1000.0,
                            d
                        )));
                    }
                }
                if max_trials > d.trials_per_condition() {
                    return Err(Error::Validation(format!(
                        "a condition holds {} trials but the declared design allows {}",
                        max_trials,
                        d.trials_per_condition()
                    )));
                }
                d
            }
            None => {
                let mut weights: Vec<f64> = records
                    .iter()
                    .map(|r| r.condition_weight)
                    .collect::<Vec<_>>();
                weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
                weights.dedup();
                DesignSpec::new(weights, max_trials.max(1))?
            }
        };

        // Balanced means: every subject covers every design weight with
        // exactly the design trial count.
        let subjects: Vec<&str> = {
            let mut out = Vec::new();
            for r in &records {
                if !out.contains(&r.subject_id.as_str()) {
                    out.push(r.subject_id.as_str());
                }
            }
            out
        };
        let mut balanced = true;
        'outer: for s in &subjects {
            for w in design.weights_kg() {
                match cells.get(&(*s, w.to_bits())) {
                    Some(idx) if idx.len() as u32 == design.trials_per_condition() => {}
                    _ => {
                        balanced = false;
                        break 'outer;
                    }
                }
            }
        }
        let mut warnings = Vec::new();
        if !balanced && !records.is_empty() {
            warnings.push(
                "unbalanced data: not every subject covers every condition \
                 with the full trial count"
                    .to_string(),
            );
        }

        Ok(Dataset {
            records,
            design,
            balanced,
            warnings,
        })
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn design(&self) -> &DesignSpec {
        &self.design
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Subject identifiers in first-appearance order.
    pub fn subject_ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for r in &self.records {
            if !out.contains(&r.subject_id.as_str()) {
                out.push(r.subject_id.as_str());
            }
        }
        out
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids().len()
    }

    /// All trials of one subject grouped by condition.
    pub fn subject_trials(&self, subject_id: &str) -> Result<SubjectTrials> {
        let mut pairs: Vec<(f64, Vec<(u32, f64)>)> = Vec::new();
        for r in self.records.iter().filter(|r| r.subject_id == subject_id) {
            match pairs
                .iter_mut()
                .find(|(w, _)| *w == r.condition_weight)
            {
                Some((_, v)) => v.push((r.trial_index, r.outcome)),
                None => pairs.push((r.condition_weight, vec![(r.trial_index, r.outcome)])),
            }
        }
        if pairs.is_empty() {
            return Err(Error::Validation(format!(
                "no trials for subject {subject_id}"
            )));
        }
        let conditions = pairs
            .into_iter()
            .map(|(w, mut trials)| {
                trials.sort_by_key(|(t, _)| *t);
                (w, trials.into_iter().map(|(_, y)| y).collect())
            })
            .collect();
        SubjectTrials::from_conditions(subject_id.to_string(), conditions)
    }

    /// Restrict one subject's trials to the conditions of `design`.
    /// Returns `Ok(None)` when the subject does not cover every design
    /// weight (the N/A case of the physician's chart).
    pub fn subject_trials_for_design(
        &self,
        subject_id: &str,
        design: &DesignSpec,
    ) -> Result<Option<SubjectTrials>> {
        let trials = self.subject_trials(subject_id)?;
        let kept: Vec<(f64, Vec<f64>)> = trials
            .conditions()
            .iter()
            .filter(|c| design.contains_weight(c.weight_kg))
            .map(|c| (c.weight_kg, c.outcomes.clone()))
            .collect();
        if kept.len() != design.n_conditions() {
            return Ok(None);
        }
        Ok(Some(SubjectTrials::from_conditions(
            subject_id.to_string(),
            kept,
        )?))
    }

    /// Write the trial CSV schema (grams in files, outcomes on the log
    /// scale with `plfr_log=true`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let to_err = |e: std::io::Error| Error::io("<writer>", e);
        writeln!(w, "subject_id,weight_grams,trial,plfr,plfr_log").map_err(to_err)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},true",
                r.subject_id,
                r.condition_weight * 1000.0,
                r.trial_index,
                r.outcome
            )
            .map_err(to_err)?;
        }
        Ok(())
    }
}

/// One subject's trials grouped by condition, sorted by ascending weight.
/// Duplicate weights are pooled into a single condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTrials {
    subject_id: String,
    conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub weight_kg: f64,
    pub outcomes: Vec<f64>,
}

impl SubjectTrials {
    pub fn from_conditions(subject_id: String, pairs: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let mut pooled: Vec<Condition> = Vec::new();
        for (w, ys) in pairs {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Validation(format!(
                    "condition weight must be positive, got {w}"
                )));
            }
            match pooled.iter_mut().find(|c| c.weight_kg == w) {
                Some(c) => c.outcomes.extend(ys),
                None => pooled.push(Condition {
                    weight_kg: w,
                    outcomes: ys,
                }),
            }
        }
        pooled.retain(|c| !c.outcomes.is_empty());
        if pooled.is_empty() {
            return Err(Error::Validation(format!(
                "subject {subject_id} has no trials"
            )));
        }
        pooled.sort_by(|a, b| a.weight_kg.partial_cmp(&b.weight_kg).unwrap());
        Ok(SubjectTrials {
            subject_id,
            conditions: pooled,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn weights_kg(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.weight_kg).collect()
    }

    pub fn condition_means(&self) -> Vec<f64> {
        self.conditions
            .iter()
            .map(|c| c.outcomes.iter().sum::<f64>() / c.outcomes.len() as f64)
            .collect()
    }

    pub fn n_trials(&self) -> usize {
        self.conditions.iter().map(|c| c.outcomes.len()).sum()
    }
}

/// Ingest the trial CSV schema
/// `subject_id,weight_grams,trial,plfr,plfr_log`; `plfr_log=false` means
/// the value is a raw PLFR and is log-transformed on the way in.
pub fn ingest_csv(path: &Path, declared_design: Option<DesignSpec>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    ingest_csv_reader(file, &path.display().to_string(), declared_design)
}

pub fn ingest_csv_reader<R: Read>(
    reader: R,
    path_label: &str,
    declared_design: Option<DesignSpec>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path_label.to_string(),
        line,
        message,
    };

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let expected = ["subject_id", "weight_grams", "trial", "plfr", "plfr_log"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_err(
            1,
            format!("header must be '{}', got '{}'", expected.join(","), got.join(",")),
        ));
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 5 {
            return Err(parse_err(line, format!("expected 5 fields, got {}", row.len())));
        }
        let subject_id = row[0].to_string();
        if subject_id.is_empty() {
            return Err(parse_err(line, "empty subject_id".to_string()));
        }
        let grams: f64 = row[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad weight_grams '{}'", &row[1])))?;
        if !grams.is_finite() || grams <= 0.0 {
            return Err(parse_err(line, format!("weight_grams must be positive, got {grams}")));
        }
        let trial: u32 = row[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad trial '{}'", &row[2])))?;
        if trial == 0 {
            return Err(parse_err(line, "trial must be >= 1".to_string()));
        }
        let plfr: f64 = row[3]
            .parse()
            .map_err(|_| parse_err(line, format!("bad plfr '{}'", &row[3])))?;
        let plfr_log = match row[4].to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(parse_err(
                    line,
                    format!("plfr_log must be true or false, got '{other}'"),
                ))
            }
        };
        let outcome = if plfr_log {
            plfr
        } else {
            if plfr <= 0.0 {
                return Err(parse_err(
                    line,
                    format!("raw plfr must be positive for the log transform, got {plfr}"),
                ));
            }
            plfr.ln()
        };
        if !outcome.is_finite() {
            return Err(parse_err(line, format!("outcome is not finite ({outcome})")));
        }
        records.push(TrialRecord {
            subject_id,
            condition_weight: grams / 1000.0,
            trial_index: trial,
            outcome,
        });
    }

    Dataset::new(records, declared_design)
}

/// Compare a clinic test design against the training design. Returns
/// warnings only: extrapolation beyond the training weight range and
/// missing within-condition replication.
pub fn validate_test_design(train: &DesignSpec, test: &DesignSpec) -> Vec<String> {
    let mut warnings = Vec::new();
    let lo = train.weights_kg().first().copied().unwrap_or(0.0);
    let hi = train.weights_kg().last().copied().unwrap_or(0.0);
    for w in test.weights_kg() {
        if *w < lo || *w > hi {
            warnings.push(format!(
                "test weight {} g lies outside the training range {}-{} g (extrapolation)",
                w * 1000.0,
                lo * 1000.0,
                hi * 1000.0
            ));
        }
    }
    if test.trials_per_condition() == 1 {
        warnings.push(
            "test design has a single trial per condition (no within-condition replication)"
                .to_string(),
        );
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(s: &str, g: f64, t: u32, y: f64) -> TrialRecord {
        TrialRecord {
            subject_id: s.to_string(),
            condition_weight: g / 1000.0,
            trial_index: t,
            outcome: y,
        }
    }

    #[test]
    fn design_requires_two_increasing_positive_weights() {
        assert!(DesignSpec::from_grams(&[250.0], 5).is_err());
        assert!(DesignSpec::from_grams(&[250.0, 250.0], 5).is_err());
        assert!(DesignSpec::from_grams(&[500.0, 250.0], 5).is_err());
        assert!(DesignSpec::from_grams(&[-250.0, 500.0], 5).is_err());
        assert!(DesignSpec::from_grams(&[250.0, 500.0], 0).is_err());
        assert!(DesignSpec::from_grams(&[250.0, 500.0], 5).is_ok());
    }

    #[test]
    fn design_string_grammar() {
        let d = DesignSpec::parse("250,500g x 5").unwrap();
        assert_eq!(d.weights_kg(), &[0.25, 0.5]);
        assert_eq!(d.trials_per_condition(), 5);
        let d = DesignSpec::parse(" 200, 500 ,800 g X 4 ").unwrap();
        assert_eq!(d.weights_kg(), &[0.2, 0.5, 0.8]);
        assert_eq!(d.trials_per_condition(), 4);
        assert!(DesignSpec::parse("250g x 5").is_err()); // single weight
        assert!(DesignSpec::parse("250,500g").is_err());
        assert!(DesignSpec::parse("250,500g x 0").is_err());
    }

    #[test]
    fn log_transform_on_ingest() {
        let csv = "subject_id,weight_grams,trial,plfr,plfr_log\n\
                   s1,250,1,16.44,false\n\
                   s1,500,1,2.8,true\n";
        let ds = ingest_csv_reader(csv.as_bytes(), "<mem>", None).unwrap();
        assert_relative_eq!(ds.records()[0].outcome, 16.44_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(ds.records()[0].outcome, 2.800, epsilon = 5e-4);
        assert_eq!(ds.records()[1].outcome, 2.8);
    }

    #[test]
    fn duplicate_trials_rejected_with_line() {
        let csv = "subject_id,weight_grams,trial,plfr,plfr_log\n\
                   s1,250,1,2.8,true\n\
                   s1,250,1,2.9,true\n";
        let err = ingest_csv_reader(csv.as_bytes(), "<mem>", None).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn nonpositive_raw_plfr_rejected() {
        let csv = "subject_id,weight_grams,trial,plfr,plfr_log\n\
                   s1,250,1,-3.0,false\n";
        let err = ingest_csv_reader(csv.as_bytes(), "<mem>", None).unwrap_err();
        assert!(err.to_string().contains("line 2") || err.to_string().contains(":2"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let csv = "subject_id,weight_grams,trial,plfr,plfr_log\n\
                   s1,250,1,2.8,true\n\
                   s1,bad,1,2.8,true\n";
        let err = ingest_csv_reader(csv.as_bytes(), "<mem>", None).unwrap_err();
        assert!(err.to_string().contains(":3"), "{err}");
    }

    #[test]
    fn trial_gap_rejected() {
        let recs = vec![rec("s1", 250.0, 1, 2.8), rec("s1", 250.0, 3, 2.9), rec("s1", 500.0, 1, 3.0)];
        assert!(Dataset::new(recs, None).is_err());
    }

    #[test]
    fn design_inference_matches_reference_cohort() {
        // 10 subjects x 10 weights (250-700 g step 50) x 6 trials.
        let mut recs = Vec::new();
        for s in 0..10 {
            for (j, g) in (0..10).map(|k| 250.0 + 50.0 * k as f64).enumerate() {
                for t in 1..=6 {
                    recs.push(rec(&format!("s{s}"), g, t, 2.8 + j as f64 * 0.01));
                }
            }
        }
        let ds = Dataset::new(recs, None).unwrap();
        assert_eq!(ds.design().n_conditions(), 10);
        assert_eq!(ds.design().trials_per_condition(), 6);
        assert!(ds.is_balanced());
        assert_eq!(ds.n_subjects(), 10);
    }

    #[test]
    fn unbalanced_flagged_not_rejected() {
        let recs = vec![
            rec("s1", 250.0, 1, 2.8),
            rec("s1", 250.0, 2, 2.9),
            rec("s1", 500.0, 1, 3.1),
        ];
        let ds = Dataset::new(recs, None).unwrap();
        assert!(!ds.is_balanced());
        assert!(!ds.warnings().is_empty());
    }

    #[test]
    fn declared_design_enforced() {
        let d = DesignSpec::from_grams(&[250.0, 500.0], 5).unwrap();
        let recs = vec![rec("s1", 300.0, 1, 2.8)];
        assert!(Dataset::new(recs, Some(d)).is_err());
    }

    #[test]
    fn test_design_warnings() {
        let train = DesignSpec::from_grams(&[250.0, 700.0], 6).unwrap();
        let sub = DesignSpec::from_grams(&[250.0, 500.0], 5).unwrap();
        assert!(validate_test_design(&train, &sub).is_empty());

        let extrap = DesignSpec::from_grams(&[550.0, 800.0], 5).unwrap();
        let w = validate_test_design(&train, &extrap);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("800"));

        let single = DesignSpec::from_grams(&[250.0, 500.0], 1).unwrap();
        let w = validate_test_design(&train, &single);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("replication"));
    }

    #[test]
    fn subject_trials_pools_duplicates_and_sorts() {
        let st = SubjectTrials::from_conditions(
            "s1".to_string(),
            vec![
                (0.5, vec![3.0]),
                (0.25, vec![2.0]),
                (0.5, vec![3.2]),
            ],
        )
        .unwrap();
        assert_eq!(st.weights_kg(), vec![0.25, 0.5]);
        assert_eq!(st.conditions()[1].outcomes, vec![3.0, 3.2]);
    }
}
