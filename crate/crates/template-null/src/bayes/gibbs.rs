//! Conjugate Gibbs sampler internals.
//!
//! Model: Y_ijt = α_i + b_i W_ij + u_ij + ε_ijt with
//! α_i ~ N(a, σ²_α), u_ij ~ N(0, σ²_u), ε ~ N(0, σ²_ε); b_i = β for
//! training subjects and β − δ for the test subject in a joint fit.
//! Priors: flat on (a, β, δ), p(σ²_ε) ∝ 1/σ²_ε,
//! σ²_α ~ Inv-Gamma(η, ν), σ²_u ~ Inv-Gamma(η_u, ν_u).
//!
//! Every full conditional is Normal or inverse gamma, so the sampler is
//! plain Gibbs over the blocks (a, {α_i}), {u_ij}, β, δ, σ²_ε, σ²_α,
//! σ²_u. Two exact reparameterizations keep the chain well mixed:
//! the weight covariate is centered internally (decorrelates intercept
//! and slope), and `a` is drawn with the α_i integrated out of the
//! likelihood, after which the α_i are drawn given `a` — one blocked
//! draw of (a, {α_i}), required for mixing when σ²_α is small.
//! All statistics are per-cell (subject × weight) sums, so one sweep
//! costs O(#cells).

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::config::{PriorConfig, RunConfig};
use crate::data::{Dataset, ModelParams};
use crate::error::{Error, Result};
use crate::estimator;
use crate::seed;

use super::FitControl;

/// Per (subject, weight) cell sufficient statistics.
#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub subject: usize,
    pub weight: f64,
    /// Centered weight, weight − w̄ over all trials.
    pub wc: f64,
    pub n: f64,
    pub mean: f64,
    pub ss_within: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SuffStats {
    pub cells: Vec<Cell>,
    /// Cell index range per subject; cells are contiguous per subject and
    /// sorted by weight within a subject.
    pub subject_cells: Vec<std::ops::Range<usize>>,
    pub n_total: f64,
    /// Trial-weighted mean weight, used for centering.
    pub w_bar: f64,
    /// Σ n·wc² over all cells (slope precision denominator).
    pub sum_n_wc2: f64,
    /// Σ n·w² over test cells (deficit precision denominator).
    pub sum_n_w2_test: f64,
    /// Subject index of the first test subject in a joint fit.
    pub test_subject: Option<usize>,
}

impl SuffStats {
    pub fn from_datasets(train: &Dataset, test: Option<&Dataset>) -> Result<Self> {
        fn push_subjects(
            data: &Dataset,
            cells: &mut Vec<Cell>,
            subject_cells: &mut Vec<std::ops::Range<usize>>,
        ) -> Result<()> {
            for sid in data.subject_ids() {
                let trials = data.subject_trials(sid)?;
                let start = cells.len();
                let subject = subject_cells.len();
                for cond in trials.conditions() {
                    let n = cond.outcomes.len() as f64;
                    let mean = cond.outcomes.iter().sum::<f64>() / n;
                    let ss_within = cond.outcomes.iter().map(|y| (y - mean).powi(2)).sum();
                    cells.push(Cell {
                        subject,
                        weight: cond.weight_kg,
                        wc: 0.0,
                        n,
                        mean,
                        ss_within,

       });
                }
                subject_cells.push(start..cells.len());
            }
            Ok(())
        }

        let mut cells = Vec::new();
        let mut subject_cells = Vec::new();
        push_subjects(train, &mut cells, &mut subject_cells)?;
        let test_subject = match test {
            Some(t) => {
                let first_test = subject_cells.len();
                push_subjects(t, &mut cells, &mut subject_cells)?;
                Some(first_test)
            }
            None => None,
        };

        let n_total: f64 = cells.iter().map(|c| c.n).sum();
        if n_total == 0.0 {
            return Err(Error::Validation("no trials to fit".to_string()));
        }
        let w_bar = cells.iter().map(|c| c.n * c.weight).sum::<f64>() / n_total;
        for c in &mut cells {
            c.wc = c.weight - w_bar;
        }
        let sum_n_wc2: f64 = cells.iter().map(|c| c.n * c.wc * c.wc).sum();
        let first_test = test_subject.unwrap_or(usize::MAX);
        let sum_n_w2_test: f64 = cells
            .iter()
            .filter(|c| c.subject >= first_test)
            .map(|c| c.n * c.weight * c.weight)
            .sum();
        Ok(SuffStats {
            cells,
            subject_cells,
            n_total,
            w_bar,
            sum_n_wc2,
            sum_n_w2_test,
            test_subject,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_cells.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    fn is_test(&self, subject: usize) -> bool {
        self.test_subject.is_some_and(|t| subject >= t)
    }

    /// Guards for the improper priors: flat (a, β) and 1/σ²_ε need
    /// within-condition replication and non-degenerate outcomes.
    pub fn check_identifiable(&self) -> Result<()> {
        if self.n_total <= self.n_cells() as f64 {
            return Err(Error::Validation(
                "no residual degrees of freedom: at least one condition must hold \
                 repeated trials to identify the residual variance"
                    .to_string(),
            ));
        }
        let ss_within: f64 = self.cells.iter().map(|c| c.ss_within).sum();
        if ss_within <= 0.0 {
            return Err(Error::Validation(
                "degenerate data: zero within-condition variance everywhere".to_string(),
            ));
        }
        if self.sum_n_wc2 <= 0.0 {
            return Err(Error::Validation(
                "degenerate design: a single distinct weight cannot identify the slope"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

/// Draw X ~ Inv-Gamma(shape, rate): density ∝ x^{-shape-1} exp(-rate/x).
pub(crate) fn draw_inv_gamma<R: Rng>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate.max(1e-300)).expect("valid gamma");
    (1.0 / g.sample(rng)).max(1e-300)
}

/// The σ²_α block conditional: Inv-Gamma(η + N/2, ν + Σ(α_i − a)²/2).
/// With no subjects this is the prior itself.
pub(crate) fn draw_var_alpha<R: Rng>(
    rng: &mut R,
    priors: &PriorConfig,
    alphas: &[f64],
    a: f64,
) -> f64 {
    let ss: f64 = alphas.iter().map(|al| (al - a).powi(2)).sum();
    draw_inv_gamma(
        rng,
        priors.eta + alphas.len() as f64 / 2.0,
        priors.nu + 0.5 * ss,
    )
}

/// Sampler state in the centered parameterization: `ac` and `alphas`
/// hold a + β·w̄ and α_i + b_i·w̄ respectively; the reported grand
/// intercept is recovered as ac − β·w̄ per draw.
struct State {
    alphas: Vec<f64>,
    us: Vec<f64>,
    ac: f64,
    beta: f64,
    delta: f64,
    var_eps: f64,
    var_alpha: f64,
    var_u: f64,
}

impl State {
    /// Cell mean residual with every term except the subject intercept.
    fn resid_minus_alpha(&self, stats: &SuffStats, k: usize) -> f64 {
        let c = &stats.cells[k];
        let mut r = c.mean - self.beta * c.wc - self.us[k];
        if stats.is_test(c.subject) {
            r += self.delta * c.weight;
        }
        r
    }

    /// Blocked draw of (a, {α_i}): first a with the α_i integrated out of
    /// the likelihood (Sherman–Morrison on the per-subject compound
    /// symmetry), then each α_i given a.
    fn update_intercepts<R: Rng>(&mut self, stats: &SuffStats, rng: &mut R) {
        let mut prec = 0.0;
        let mut num = 0.0;
        for range in &stats.subject_cells {
            let mut s_i = 0.0;
            let mut r_i = 0.0;
            for k in range.clone() {
                let c = &stats.cells[k];
                s_i += c.n / self.var_eps;
                r_i += c.n * self.resid_minus_alpha(stats, k) / self.var_eps;
            }
            let shrink = 1.0 + self.var_alpha * s_i;
            prec += s_i / shrink;
            num += r_i / shrink;
        }
        self.ac = draw_normal(rng, num / prec, (1.0 / prec).sqrt());

        for (i, range) in stats.subject_cells.iter().enumerate() {
            let mut s_i = 0.0;
            let mut r_i = 0.0;
            for k in range.clone() {
                let c = &stats.cells[k];
                s_i += c.n / self.var_eps;
                r_i += c.n * self.resid_minus_alpha(stats, k) / self.var_eps;
            }
            let prec = s_i + 1.0 / self.var_alpha;
            let mean = (r_i + self.ac / self.var_alpha) / prec;
            self.alphas[i] = draw_normal(rng, mean, (1.0 / prec).sqrt());
        }
    }

    fn update_us<R: Rng>(&mut self, stats: &SuffStats, rng: &mut R) {
        for (k, c) in stats.cells.iter().enumerate() {
            let mut resid = c.mean - self.alphas[c.subject] - self.beta * c.wc;
            if stats.is_test(c.subject) {
                resid += self.delta * c.weight;
            }
            let prec = c.n / self.var_eps + 1.0 / self.var_u;
            let mean = (c.n * resid / self.var_eps) / prec;
            self.us[k] = draw_normal(rng, mean, (1.0 / prec).sqrt());
        }
    }

    fn update_beta<R: Rng>(&mut self, stats: &SuffStats, rng: &mut R) {
        let mut num = 0.0;
        for (k, c) in stats.cells.iter().enumerate() {
            let mut z = c.mean - self.alphas[c.subject] - self.us[k];
            if stats.is_test(c.subject) {
                z += self.delta * c.weight;
            }
            num += c.n * c.wc * z;
        }
        let den = stats.sum_n_wc2;
        self.beta = draw_normal(rng, num / den, (self.var_eps / den).sqrt());
    }

    fn update_delta<R: Rng>(&mut self, stats: &SuffStats, rng: &mut R) {
        let mut num = 0.0;
        for (k, c) in stats.cells.iter().enumerate() {
            if !stats.is_test(c.subject) {
                continue;
            }
            let v = self.alphas[c.subject] + self.beta * c.wc + self.us[k] - c.mean;
            num += c.n * c.weight * v;
        }
        let den = stats.sum_n_w2_test;
        self.delta = draw_normal(rng, num / den, (self.var_eps / den).sqrt());
    }

    fn update_var_eps<R: Rng>(&mut self, stats: &SuffStats, rng: &mut R) {
        let mut sse = 0.0;
        for (k, c) in stats.cells.iter().enumerate() {
            let mut mu = self.alphas[c.subject] + self.beta * c.wc + self.us[k];
            if stats.is_test(c.subject) {
                mu -= self.delta * c.weight;
            }
            sse += c.ss_within + c.n * (c.mean - mu).powi(2);
        }
        self.var_eps = draw_inv_gamma(rng, stats.n_total / 2.0, sse / 2.0);
    }

    fn update_var_alpha<R: Rng>(&mut self, priors: &PriorConfig, rng: &mut R) {
        self.var_alpha = draw_var_alpha(rng, priors, &self.alphas, self.ac);
    }

    fn update_var_u<R: Rng>(&mut self, priors: &PriorConfig, rng: &mut R) {
        let ss: f64 = self.us.iter().map(|u| u * u).sum();
        self.var_u = draw_inv_gamma(
            rng,
            priors.eta_u + self.us.len() as f64 / 2.0,
            priors.nu_u + 0.5 * ss,
        );
    }
}

fn draw_normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng)
}

struct MomEstimates {
    ac: f64,
    beta: f64,
    delta: f64,
    var_alpha: f64,
    var_u: f64,
    var_eps: f64,
    alpha_hats: Vec<f64>,
}

fn mom_estimates(stats: &SuffStats) -> MomEstimates {
    let per_subject_slope = |range: &std::ops::Range<usize>| -> Option<f64> {
        let cells = &stats.cells[range.clone()];
        if cells.len() < 2 {
            return None;
        }
        let w: Vec<f64> = cells.iter().map(|c| c.weight).collect();
        let m: Vec<f64> = cells.iter().map(|c| c.mean).collect();
        estimator::naive_slope_from_means(&w, &m).ok()
    };

    let train_slopes: Vec<f64> = stats
        .subject_cells
        .iter()
        .enumerate()
        .filter(|(i, _)| !stats.is_test(*i))
        .filter_map(|(_, r)| per_subject_slope(r))
        .collect();
    let beta = if train_slopes.is_empty() {
        pooled_ols_slope(stats)
    } else {
        train_slopes.iter().sum::<f64>() / train_slopes.len() as f64
    };

    let delta = stats
        .test_subject
        .and_then(|t| per_subject_slope(&stats.subject_cells[t]))
        .map(|s| beta - s)
        .unwrap_or(0.0);

    let mut alpha_hats = Vec::with_capacity(stats.n_subjects());
    for (i, range) in stats.subject_cells.iter().enumerate() {
        let cells = &stats.cells[range.clone()];
        let mut est = cells
            .iter()
            .map(|c| c.mean - beta * c.wc)
            .sum::<f64>()
            / cells.len() as f64;
        if stats.is_test(i) {
            est += delta
                * cells.iter().map(|c| c.weight).sum::<f64>()
                / cells.len() as f64;
        }
        alpha_hats.push(est);
    }
    let ac = alpha_hats.iter().sum::<f64>() / alpha_hats.len() as f64;
    let var_alpha = variance(&alpha_hats).max(1e-4);

    let mut cell_resids = Vec::with_capacity(stats.n_cells());
    for (i, range) in stats.subject_cells.iter().enumerate() {
        for c in &stats.cells[range.clone()] {
            let mut r = c.mean - alpha_hats[i] - beta * c.wc;
            if stats.is_test(i) {
                r += delta * c.weight;
            }
            cell_resids.push(r);
        }
    }
    let var_u = variance(&cell_resids).max(1e-4);

    let ss_within: f64 = stats.cells.iter().map(|c| c.ss_within).sum();
    let df = (stats.n_total - stats.n_cells() as f64).max(1.0);
    let var_eps = (ss_within / df).max(1e-4);

    MomEstimates {
        ac,
        beta,
        delta,
        var_alpha,
        var_u,
        var_eps,
        alpha_hats,
    }
}

fn pooled_ols_slope(stats: &SuffStats) -> f64 {
    let ybar = stats.cells.iter().map(|c| c.n * c.mean).sum::<f64>() / stats.n_total;
    let sxy: f64 = stats
        .cells
        .iter()
        .map(|c| c.n * c.wc * (c.mean - ybar))
        .sum();
    if stats.sum_n_wc2 > 0.0 {
        sxy / stats.sum_n_wc2
    } else {
        0.0
    }
}

fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// One retained draw with tags.
pub(crate) struct ChainDraw {
    pub iter: u32,
    pub params: ModelParams,
    pub delta: f64,
}

/// Run one chain; overdispersed start from method-of-moments estimates,
/// each multiplied by exp(z) with z ~ N(0, 0.5²) drawn from the chain's
/// own stream.
pub(crate) fn run_chain(
    stats: &SuffStats,
    priors: &PriorConfig,
    run: &RunConfig,
    control: &FitControl,
    joint: bool,
    chain_idx: u32,
) -> Vec<ChainDraw> {
    let mut rng = seed::stream(run.seed, "gibbs-chain", u64::from(chain_idx));
    let jitter = Normal::new(0.0_f64, 0.5).unwrap();
    let jit = |rng: &mut rand_chacha::ChaCha8Rng| jitter.sample(rng).exp();

    let mom = mom_estimates(stats);
    let mut st = State {
        alphas: mom.alpha_hats.clone(),
        us: vec![0.0; stats.n_cells()],
        ac: mom.ac * jit(&mut rng),
        beta: mom.beta * jit(&mut rng),
        delta: if joint { mom.delta * jit(&mut rng) } else { 0.0 },
        var_eps: mom.var_eps * jit(&mut rng),
        var_alpha: control
            .fix_var_alpha
            .unwrap_or(mom.var_alpha * jit(&mut rng)),
        var_u: control.fix_var_u.unwrap_or(mom.var_u * jit(&mut rng)),
    };

    let kept = (run.draws_per_chain - run.burn_in) as usize;
    let mut out = Vec::with_capacity(kept);
    for iter in 0..run.draws_per_chain {
        st.update_intercepts(stats, &mut rng);
        st.update_us(stats, &mut rng);
        st.update_beta(stats, &mut rng);
        if joint {
            st.update_delta(stats, &mut rng);
        }
        st.update_var_eps(stats, &mut rng);
        if control.fix_var_alpha.is_none() {
            st.update_var_alpha(priors, &mut rng);
        }
        if control.fix_var_u.is_none() {
            st.update_var_u(priors, &mut rng);
        }
        if iter >= run.burn_in {
            out.push(ChainDraw {
                iter: iter + 1,
                params: ModelParams {
                    grand_intercept: st.ac - st.beta * stats.w_bar,
                    beta_pop: st.beta,
                    var_alpha: st.var_alpha,
                    var_u: st.var_u,
                    var_eps: st.var_eps,
                },
                delta: st.delta,
            });
        }
    }
    out
}
