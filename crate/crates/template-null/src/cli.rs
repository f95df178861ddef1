//! Command-line surface: template fitting in the lab, assessment in the
//! clinic, error-rate simulation, and power/design exploration.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 success with a
//! non-convergence flag. Every command honors `--seed`; with a fixed
//! seed (and SOURCE_DATE_EPOCH for the artifact timestamp) repeated
//! invocations produce byte-identical outputs for any worker count.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, PriorConfig, RunConfig};
use crate::data::{self, DesignSpec};
use crate::decision;
use crate::error::{Error, Result};
use crate::seed;
use crate::simlab::{self, SimScenario};
use crate::template::{self, TemplateDistribution};
use crate::bayes;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a command did: process exit code, files written, and a
/// human-readable summary for stdout.
#[derive(Debug, Clone)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Parser, Debug)]
#[command(
    name = "template-null",
    version,
    about = "Single-subject assessment against a healthy reference cohort \
             via template null distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the training model and write a template artifact for a test design.
    FitTemplate(FitTemplateArgs),
    /// Score clinic trials against template artifacts; emit the physician's chart.
    Assess(AssessArgs),
    /// Reproduce the error-rate table (Tests A, B, B*, C) for a scenario.
    Simulate(SimulateArgs),
    /// Power curves across candidate single-subject designs.
    Power(PowerArgs),
}

#[derive(Args, Debug)]
pub struct FitTemplateArgs {
    /// Training trials CSV (subject_id,weight_grams,trial,plfr,plfr_log).
    #[arg(long)]
    pub train: PathBuf,
    /// Test design the template is built for, e.g. "250,500g x 5".
    #[arg(long)]
    pub design: String,
    /// Output template artifact (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Flat key=value config file (seed, chains, eta, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct AssessArgs {
    /// Template artifact; repeat the flag for multiple experimental conditions.
    #[arg(long, required = true)]
    pub template: Vec<PathBuf>,
    /// Clinic trials CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Test level α in (0,1).
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Output report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for the bootstrap intervals.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// "one", "two", or a scenario config file.
    #[arg(long)]
    pub scenario: String,
    /// Comma-separated test levels.
    #[arg(long, default_value = "0.05,0.10")]
    pub levels: String,
    /// Test replicates per cell.
    #[arg(long, default_value_t = 500)]
    pub replicates: u32,
    /// Replicate trainings for Tests B/B*.
    #[arg(long, default_value_t = 50)]
    pub templates: u32,
    /// Output table CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct PowerArgs {
    /// File with one test design per line, e.g. "200,800g x 5".
    #[arg(long)]
    pub designs: PathBuf,
    /// δ grid: "start:end:step" or a comma list.
    #[arg(long, default_value = "0.1:1.3:0.1")]
    pub delta: String,
    /// Test level α.
    #[arg(long, default_value_t = 0.10)]
    pub level: f64,
    /// Independent template estimation runs.
    #[arg(long, default_value_t = 100)]
    pub runs: u32,
    /// Output curves CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn run(cli: &Cli) -> Result<CommandResult> {
    match &cli.command {
        Command::FitTemplate(args) => cmd_fit_template(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Power(args) => cmd_power(args),
    }
}

/// `# template-null vX seed=N config=HASH` comment for output CSVs.
fn header_comment(seed_value: u64, config_repr: &str) -> String {
    format!(
        "template-null v{TOOL_VERSION} seed={seed_value} config={:016x}",
        seed::fnv1a64(config_repr.as_bytes())
    )
}

fn load_run_config(
    config: Option<&PathBuf>,
    seed_override: Option<u64>,
) -> Result<(RunConfig, PriorConfig)> {
    let (mut run, priors) = match config {
        Some(path) => config::parse_config_file(path)?,
        None => (RunConfig::default(), PriorConfig::default()),
    };
    if let Some(s) = seed_override {
        run.seed = s;
    }
    Ok((run, priors))
}

pub fn cmd_fit_template(args: &FitTemplateArgs) -> Result<CommandResult> {
    let (run, priors) = load_run_config(args.config.as_ref(), args.seed)?;
    let design = DesignSpec::parse(&args.design)?;
    let train = data::ingest_csv(&args.train, None)?;

    let mut summary = String::new();
    for w in train.warnings() {
        summary.push_str(&format!("warning: {w}\n"));
    }
    for w in data::validate_test_design(train.design(), &design) {
        summary.push_str(&format!("warning: {w}\n"));
    }

    let fit = bayes::fit_training(&train, &priors, &run)?;
    let t = template::build_template(&fit, &design, run.template_draws, run.seed)?;
    t.save_json(&args.out)?;

    summary.push_str(&format!(
        "template written to {} ({} draws, design {})\n",
        args.out.display(),
        t.len(),
        design
    ));
    summary.push_str(&format!("benchmark slope: {:.4}\n", t.benchmark_slope()));
    summary.push_str("scale reduction (R-hat):");
    for (name, value) in fit.rhat.entries() {
        summary.push_str(&format!(" {name}={value:.4}"));
    }
    summary.push('\n');
    let exit_code = if fit.converged {
        0
    } else {
        summary.push_str("warning: sampler flagged non-convergence (R-hat > 1.1)\n");
        2
    };
    Ok(CommandResult {
        exit_code,
        artifacts: vec![args.out.clone()],
        summary,
    })
}

pub fn cmd_assess(args: &AssessArgs) -> Result<CommandResult> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::Config(format!(
            "--level must lie in (0,1), got {}",
            args.level
        )));
    }
    let mut conditions: Vec<(String, TemplateDistribution)> = Vec::new();
    for path in &args.template {
        let t = TemplateDistribution::load_json(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        conditions.push((name, t));
    }
    let subjects = data::ingest_csv(&args.data, None)?;

    let mut summary = String::new();
    for (name, t) in &conditions {
        if !t.decision_ready() {
            summary.push_str(&format!(
                "warning: template '{name}' holds only {} draws\n",
                t.len()
            ));
        }
    }

    let cond_refs: Vec<(String, &TemplateDistribution)> = conditions
        .iter()
        .map(|(n, t)| (n.clone(), t))
        .collect();
    let rows = decision::physician_chart(&cond_refs, &subjects, args.level, args.seed)?;
    if !rows.is_empty() && rows.iter().all(|r| r.report.is_none()) {
        return Err(Error::DesignMismatch(
            "no subject in the data covers any template's weight conditions".to_string(),
        ));
    }

    let config_repr = format!(
        "assess level={} templates={:?}",
        args.level,
        args.template.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()
    );
    let file = std::fs::File::create(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    decision::write_chart_csv(
        &rows,
        conditions.len() > 1,
        Some(&header_comment(args.seed, &config_repr)),
        &mut w,
    )?;
    w.flush().map_err(|e| Error::io(args.out.display().to_string(), e))?;

    summary.push_str(&decision::format_chart_table(&rows));
    summary.push_str(&format!("report written to {}\n", args.out.display()));
    Ok(CommandResult {
        exit_code: 0,
        artifacts: vec![args.out.clone()],
        summary,
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<CommandResult> {
    let levels = args
        .levels
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad level '{}'", p.trim())))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut scn = match args.scenario.as_str() {
        "one" => SimScenario::one(args.seed),
        "two" => SimScenario::two(args.seed),
        path => {
            let p = PathBuf::from(path);
            if !p.exists() {
                return Err(Error::Config(format!(
                    "unknown scenario '{path}' (expected one, two, or a scenario file)"
                )));
            }
            SimScenario::from_config_file(&p, args.seed)?
        }
    };
    scn.levels = levels;
    scn.replicates = args.replicates;
    scn.validate()?;

    let priors = PriorConfig::default();
    let run = RunConfig {
        seed: args.seed,
        ..RunConfig::default()
    };
    let table = simlab::run_full_table(&scn, &args.scenario, args.templates, &priors, &run)?;

    let config_repr = format!(
        "simulate scenario={} levels={:?} replicates={} templates={}",
        args.scenario, scn.levels, scn.replicates, args.templates
    );
    let file = std::fs::File::create(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    simlab::write_table_csv(&table, Some(&header_comment(args.seed, &config_repr)), &mut w)?;
    w.flush().map_err(|e| Error::io(args.out.display().to_string(), e))?;

    let mut summary = format!(
        "error-rate table written to {} ({} levels x {} deltas)\n",
        args.out.display(),
        table.levels.len(),
        table.delta_grid.len()
    );
    summary.push_str(&format!(
        "templates: {} used, {} excluded for non-convergence; joint fits: {} run, {} flagged\n",
        table.n_templates,
        table.n_excluded_templates,
        table.n_joint_fits,
        table.n_flagged_joint_fits
    ));

    let template_flag_rate = f64::from(table.n_excluded_templates) / f64::from(args.templates);
    let joint_flag_rate = if table.n_joint_fits > 0 {
        f64::from(table.n_flagged_joint_fits) / f64::from(table.n_joint_fits)
    } else {
        0.0
    };
    let exit_code = if template_flag_rate > 0.10 || joint_flag_rate > 0.10 {
        summary.push_str("warning: more than 10% of fits flagged non-converged\n");
        2
    } else {
        0
    };
    Ok(CommandResult {
        exit_code,
        artifacts: vec![args.out.clone()],
        summary,
    })
}

pub fn cmd_power(args: &PowerArgs) -> Result<CommandResult> {
    let text = std::fs::read_to_string(&args.designs)
        .map_err(|e| Error::io(args.designs.display().to_string(), e))?;
    let mut designs = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        designs.push(DesignSpec::parse(line)?);
    }
    if designs.is_empty() {
        return Err(Error::Config(format!(
            "design file {} holds no designs",
            args.designs.display()
        )));
    }
    let delta_grid = simlab::parse_delta_grid(&args.delta)?;
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::Config(format!(
            "--level must lie in (0,1), got {}",
            args.level
        )));
    }

    let priors = PriorConfig::default();
    let run = RunConfig {
        seed: args.seed,
        ..RunConfig::default()
    };
    let curves = simlab::power_study(
        &designs,
        &simlab::reference_truth(),
        &simlab::reference_train_design(),
        10,
        &delta_grid,
        args.level,
        args.runs,
        args.seed,
        &priors,
        &run,
    )?;

    let config_repr = format!(
        "power designs={} delta={} level={} runs={}",
        designs.len(),
        args.delta,
        args.level,
        args.runs
    );
    let file = std::fs::File::create(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    simlab::write_power_csv(&curves, Some(&header_comment(args.seed, &config_repr)), &mut w)?;
    w.flush().map_err(|e| Error::io(args.out.display().to_string(), e))?;

    let mut summary = format!(
        "power curves written to {} ({} designs x {} deltas, level {})\n",
        args.out.display(),
        designs.len(),
        delta_grid.len(),
        args.level
    );
    for c in &curves {
        let last = c.points.last().expect("nonempty grid");
        summary.push_str(&format!(
            "  {}: power {:.3} at delta {:.2}\n",
            c.design, last.power, last.delta_alt
        ));
    }
    Ok(CommandResult {
        exit_code: 0,
        artifacts: vec![args.out.clone()],
        summary,
    })
}

