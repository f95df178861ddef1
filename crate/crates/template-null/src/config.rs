//! Run and prior configuration, plus the flat key-value config file.

use std::path::Path;

use crate::error::{Error, Result};

/// Inverse-gamma hyperparameters for the variance components.
///
/// `eta`/`nu` control σ²_α (prior mean ν/(η−1)); `eta_u`/`nu_u` control
/// σ²_u. Defaults follow the reference simulation setup (η=5, ν=1) and a
/// weakly informative choice for the subject-weight effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub eta: f64,
    pub nu: f64,
    pub eta_u: f64,
    pub nu_u: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            eta: 5.0,
            nu: 1.0,
            eta_u: 2.0,
            nu_u: 0.01,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) || !(self.eta_u > 1.0) {
            return Err(Error::Config(
                "eta and eta_u must be > 1 so the prior mean nu/(eta-1) exists".to_string(),
            ));
        }
        if !(self.nu > 0.0) || !(self.nu_u > 0.0) {
            return Err(Error::Config("nu and nu_u must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Sampler and template sizes shared across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub chains: u32,
    pub draws_per_chain: u32,
    pub burn_in: u32,
    /// Template size M.
    pub template_draws: u32,
    /// Test level α.
    pub test_level: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            chains: 3,
            draws_per_chain: 2000,
            burn_in: 1000,
            template_draws: 3000,
            test_level: 0.05,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::Config(
                "at least 2 chains are required for convergence diagnostics".to_string(),
            ));
        }
        if self.burn_in >= self.draws_per_chain {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than draws_per_chain ({})",
                self.burn_in, self.draws_per_chain
            )));
        }
        if self.template_draws == 0 {
            return Err(Error::Config("template_draws must be >= 1".to_string()));
        }
        if !(self.test_level > 0.0 && self.test_level < 1.0) {
            return Err(Error::Config(format!(
                "test_level must lie in (0,1), got {}",
                self.test_level
            )));
        }
        Ok(())
    }

    /// Retained draws across all chains.
    pub fn kept_draws(&self) -> u32 {
        self.chains * (self.draws_per_chain - self.burn_in)
    }
}

/// Parse the flat `key=value` config file. Keys match the RunConfig and
/// PriorConfig field names exactly; `#` starts a comment.
pub fn parse_config_str(text: &str, label: &str) -> Result<(RunConfig, PriorConfig)> {
    let mut run = RunConfig::default();
    let mut priors = PriorConfig::default();
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
        let bad = |what: &str| err(format!("bad {what} value '{value}'"));
        match key {
            "seed" => run.seed = value.parse().map_err(|_| bad("seed"))?,
            "chains" => run.chains = value.parse().map_err(|_| bad("chains"))?,
            "draws_per_chain" => {
                run.draws_per_chain = value.parse().map_err(|_| bad("draws_per_chain"))?
            }
            "burn_in" => run.burn_in = value.parse().map_err(|_| bad("burn_in"))?,
            "template_draws" => {
                run.template_draws = value.parse().map_err(|_| bad("template_draws"))?
            }
            "test_level" => run.test_level = value.parse().map_err(|_| bad("test_level"))?,
            "eta" => priors.eta = value.parse().map_err(|_| bad("eta"))?,
            "nu" => priors.nu = value.parse().map_err(|_| bad("nu"))?,
            "eta_u" => priors.eta_u = value.parse().map_err(|_| bad("eta_u"))?,
            "nu_u" => priors.nu_u = value.parse().map_err(|_| bad("nu_u"))?,
            other => return Err(err(format!("unknown config key '{other}'"))),
        }
    }
    run.validate()?;
    priors.validate()?;
    Ok((run, priors))
}

pub fn parse_config_file(path: &Path) -> Result<(RunConfig, PriorConfig)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        PriorConfig::default().validate().unwrap();
        assert_eq!(RunConfig::default().kept_draws(), 3000);
    }

    #[test]
    fn parses_flat_key_values() {
        let (run, priors) = parse_config_str(
            "seed=7\nchains=4\ndraws_per_chain=1500 # comment\nburn_in=500\n\
             template_draws=2000\ntest_level=0.10\neta=6\nnu=1.5\neta_u=3\nnu_u=0.02\n",
            "<mem>",
        )
        .unwrap();
        assert_eq!(run.seed, 7);
        assert_eq!(run.chains, 4);
        assert_eq!(run.template_draws, 2000);
        assert_eq!(priors.eta, 6.0);
        assert_eq!(priors.nu_u, 0.02);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse_config_str("bogus=1\n", "<mem>").is_err());
        assert!(parse_config_str("seed=notanumber\n", "<mem>").is_err());
        assert!(parse_config_str("burn_in=3000\n", "<mem>").is_err());
        assert!(parse_config_str("test_level=1.5\n", "<mem>").is_err());
        assert!(parse_config_str("eta=0.5\n", "<mem>").is_err());
    }
}
