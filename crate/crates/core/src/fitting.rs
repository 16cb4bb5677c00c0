//! Maximum-likelihood fits of goal-count series and AIC model comparison.
//!
//! Three two-parameter families are fitted: CMP (by simplex search on
//! `(ln λ, ln ν)`), Gaussian (closed form, density evaluated at the integer
//! counts), and Negative Binomial (size `r` searched with the success
//! probability profiled out).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::{self, Cmp, CmpError, CmpParams, SeriesControl};
use crate::optim::{golden_section, nelder_mead, SimplexOptions};

/// Every family compared here has two free parameters.
pub const N_PARAMS: u32 = 2;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("series `{label}` has {len} observations; at least 2 are required")]
    SeriesTooShort { label: String, len: usize },
    #[error("series `{0}` has zero variance; no finite maximum-likelihood estimate exists")]
    DegenerateSeries(String),
    #[error("series `{0}` has zero mean")]
    ZeroMean(String),
    #[error(transparent)]
    Cmp(#[from] CmpError),
}

/// Goals per match for one team in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSeries {
    counts: Vec<u64>,
    label: String,
}

impl GoalSeries {
    pub fn new(counts: Vec<u64>, label: impl Into<String>) -> Result<Self, FitError> {
        let label = label.into();
        if counts.len() < 2 {
            return Err(FitError::SeriesTooShort { label, len: counts.len() });
        }
        Ok(Self { counts, label })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.len() as f64
    }

    /// Distinct values with their multiplicities, ascending. Sums run over
    /// this so results do not depend on the order of the counts.
    fn tally(&self) -> Vec<(u64, f64)> {
        let mut freq = std::collections::BTreeMap::new();
        for &x in &self.counts {
            *freq.entry(x).or_insert(0u64) += 1;
        }
        freq.into_iter().map(|(x, k)| (x, k as f64)).collect()
    }

    fn sum_sq_dev(&self) -> f64 {
        let m = self.mean();
        self.tally().iter().map(|&(x, k)| k * (x as f64 - m).powi(2)).sum()
    }
}

/// Sample mean and sample variance (divisor `n − 1`).
pub fn empirical_moments(series: &GoalSeries) -> (f64, f64) {
    (series.mean(), series.sum_sq_dev() / (series.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Cmp,
    Gaussian,
    NegativeBinomial,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cmp => "Conway-Maxwell-Poisson",
            Family::Gaussian => "Gaussian",
            Family::NegativeBinomial => "Negative Binomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitParams {
    Cmp { lambda: f64, nu: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// `size = None` is the Poisson limit `r → ∞`, `prob → 1`.
    NegativeBinomial { size: Option<f64>, prob: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitDiagnostic {
    /// Variance does not exceed the mean, so the Negative Binomial size
    /// estimate diverges; the Poisson-limit likelihood is reported instead.
    Underdispersed,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: Family,
    pub params: FitParams,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_params: u32,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostic: Option<FitDiagnostic>,
}

impl FitReport {
    fn new(
        family: Family,
        params: FitParams,
        log_likelihood: f64,
        converged: bool,
        iterations: usize,
        diagnostic: Option<FitDiagnostic>,
    ) -> Self {
        Self {
            family,
            params,
            log_likelihood,
            aic: aic(log_likelihood),
            n_params: N_PARAMS,
            converged,
            iterations,
            diagnostic,
        }
    }

    /// The fitted CMP parameters, if this is a CMP report.
    pub fn cmp_params(&self) -> Option<CmpParams> {
        match self.params {
            FitParams::Cmp { lambda, nu } => CmpParams::new(lambda, nu).ok(),
            _ => None,
        }
    }
}

/// `2k − 2ℓ` with `k = 2`.
pub fn aic(log_likelihood: f64) -> f64 {
    2.0 * f64::from(N_PARAMS) - 2.0 * log_likelihood
}

fn check_spread(series: &GoalSeries) -> Result<(), FitError> {
    if series.sum_sq_dev() == 0.0 {
        return Err(FitError::DegenerateSeries(series.label.clone()));
    }
    Ok(())
}

/// `Σ ln(x_i!)`.
fn sum_ln_factorial(series: &GoalSeries) -> f64 {
    series.tally().iter().map(|&(x, k)| k * cmp::ln_factorial(x)).sum()
}

/// `ℓ(λ, ν) = Σ x_i ln λ − ν Σ ln(x_i!) − n ln Z(λ, ν)`.
pub fn cmp_log_likelihood(series: &GoalSeries, params: CmpParams, ctrl: &SeriesControl) -> Result<f64, CmpError> {
    let log_z = cmp::log_normalizer(params, ctrl)?;
    Ok(series.total() as f64 * params.lambda().ln() - params.nu() * sum_ln_factorial(series)
        - series.len() as f64 * log_z)
}

pub fn gaussian_log_likelihood(series: &GoalSeries, mean: f64, sd: f64) -> f64 {
    let var = sd * sd;
    series
        .tally()
        .iter()
        .map(|&(x, k)| k * (-0.5 * LN_2PI - sd.ln() - (x as f64 - mean).powi(2) / (2.0 * var)))
        .sum()
}

/// `ln Γ(x + r) − ln Γ(r)` as a finite product, exact for integer `x` even
/// when `r` is enormous.
fn ln_rising(r: f64, x: u64) -> f64 {
    (0..x).map(|k| (r + k as f64).ln()).sum()
}

/// Negative Binomial log-likelihood with `P(x) = Γ(x+r)/(Γ(r) x!) p^r (1−p)^x`.
pub fn negative_binomial_log_likelihood(series: &GoalSeries, size: f64, prob: f64) -> f64 {
    let (ln_p, ln_q) = (prob.ln(), (-prob).ln_1p());
    series
        .tally()
        .iter()
        .map(|&(x, k)| k * (ln_rising(size, x) - cmp::ln_factorial(x) + size * ln_p + x as f64 * ln_q))
        .sum()
}

pub fn poisson_log_likelihood(series: &GoalSeries, rate: f64) -> f64 {
    let n = series.len() as f64;
    series.total() as f64 * rate.ln() - n * rate - sum_ln_factorial(series)
}

/// Finds `ln λ` with `E[X] = target` at fixed `ν` by bisection; the mean is
/// increasing in `λ`.
fn match_mean_log_lambda(target: f64, nu: f64, ctrl: &SeriesControl) -> Option<f64> {
    let mean_at = |ln_lambda: f64| -> f64 {
        CmpParams::new(ln_lambda.exp(), nu)
            .and_then(|p| Cmp::new(p, ctrl))
            .map(|d| d.mean_and_variance().0)
            .unwrap_or(f64::INFINITY)
    };
    let guess = nu * (target + (nu - 1.0) / (2.0 * nu)).max(0.5).ln();
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    let mut widen = 0;
    while mean_at(lo) > target {
        lo -= 2.0 * (hi - lo);
        widen += 1;
        if widen > 20 {
            return None;
        }
    }
    while mean_at(hi) < target {
        hi += 2.0 * (hi - lo);
        widen += 1;
        if widen > 40 {
            return None;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Maximum-likelihood CMP fit.
///
/// Starts from `ν₀ = mean / variance` and the `λ₀` that reproduces the
/// sample mean at `ν₀`. A report with `converged = false` carries the best
/// point found within the iteration budget.
pub fn fit_cmp(series: &GoalSeries, ctrl: &SeriesControl) -> Result<FitReport, FitError> {
    check_spread(series)?;
    let (mean, var) = empirical_moments(series);
    if mean <= 0.0 {
        return Err(FitError::ZeroMean(series.label.clone()));
    }

    let n = series.len() as f64;
    let total = series.total() as f64;
    let sum_lf = sum_ln_factorial(series);
    let neg_ll = |theta: &[f64]| -> f64 {
        let (lambda, nu) = (theta[0].exp(), theta[1].exp());
        match CmpParams::new(lambda, nu).and_then(|p| cmp::log_normalizer(p, ctrl)) {
            Ok(log_z) => -(total * theta[0] - nu * sum_lf - n * log_z),
            Err(_) => f64::INFINITY,
        }
    };

    let nu0 = mean / var;
    let ln_lambda0 = match_mean_log_lambda(mean, nu0, ctrl).unwrap_or(nu0 * mean.ln());
    let best = nelder_mead(neg_ll, &[ln_lambda0, nu0.ln()], &SimplexOptions::default());

    let params = CmpParams::new(best.x[0].exp(), best.x[1].exp())?;
    let log_likelihood = cmp_log_likelihood(series, params, ctrl)?;
    Ok(FitReport::new(
        Family::Cmp,
        FitParams::Cmp {
            lambda: params.lambda(),
            nu: params.nu(),
        },
        log_likelihood,
        best.converged,
        best.iterations,
        (!best.converged).then_some(FitDiagnostic::IterationLimit),
    ))
}

/// Closed-form Gaussian MLE (variance with divisor `n`).
pub fn fit_gaussian(series: &GoalSeries) -> Result<FitReport, FitError> {
    check_spread(series)?;
    let mean = series.mean();
    let sd = (series.sum_sq_dev() / series.len() as f64).sqrt();
    let log_likelihood = gaussian_log_likelihood(series, mean, sd);
    Ok(FitReport::new(
        Family::Gaussian,
        FitParams::Gaussian { mean, sd },
        log_likelihood,
        true,
        0,
        None,
    ))
}

const NB_LN_SIZE_RANGE: (f64, f64) = (-12.0, 30.0);
const NB_GRID_POINTS: usize = 211;

/// Negative Binomial MLE, profiling `p̂ = r / (r + mean)` and searching `ln r`.
///
/// When the variance (divisor `n`) does not exceed the mean the likelihood
/// increases without bound towards the Poisson limit; the report then has
/// `converged = false`, [`FitDiagnostic::Underdispersed`] and the Poisson
/// log-likelihood at the sample mean.
pub fn fit_negative_binomial(series: &GoalSeries) -> Result<FitReport, FitError> {
    check_spread(series)?;
    let mean = series.mean();
    let biased_var = series.sum_sq_dev() / series.len() as f64;
    if biased_var <= mean {
        return Ok(FitReport::new(
            Family::NegativeBinomial,
            FitParams::NegativeBinomial { size: None, prob: 1.0 },
            poisson_log_likelihood(series, mean),
            false,
            0,
            Some(FitDiagnostic::Underdispersed),
        ));
    }

    let neg_profile = |ln_size: f64| {
        let size = ln_size.exp();
        -negative_binomial_log_likelihood(series, size, size / (size + mean))
    };

    // Coarse scan, then golden section inside the bracket around the best cell.
    let (lo, hi) = NB_LN_SIZE_RANGE;
    let step = (hi - lo) / (NB_GRID_POINTS - 1) as f64;
    let best_cell = (0..NB_GRID_POINTS)
        .map(|i| (i, neg_profile(lo + step * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let a = lo + step * best_cell.saturating_sub(1) as f64;
    let b = lo + step * (best_cell + 1).min(NB_GRID_POINTS - 1) as f64;
    let (ln_size, _, iterations) = golden_section(neg_profile, a, b, 1e-10);

    let size = ln_size.exp();
    let prob = size / (size + mean);
    let on_edge = best_cell == 0 || best_cell == NB_GRID_POINTS - 1;
    Ok(FitReport::new(
        Family::NegativeBinomial,
        FitParams::NegativeBinomial { size: Some(size), prob },
        negative_binomial_log_likelihood(series, size, prob),
        !on_edge,
        iterations,
        None,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFailure {
    pub family: Family,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    /// Ascending AIC; equivalently descending log-likelihood.
    pub reports: Vec<FitReport>,
    pub failures: Vec<FamilyFailure>,
}

impl ModelComparison {
    pub fn best(&self) -> Option<&FitReport> {
        self.reports.first()
    }

    pub fn get(&self, family: Family) -> Option<&FitReport> {
        self.reports.iter().find(|r| r.family == family)
    }
}

/// Fits all three families and orders them by AIC. A family that cannot be
/// fitted is listed under `failures` instead of aborting the comparison.
pub fn compare_models(series: &GoalSeries, ctrl: &SeriesControl) -> ModelComparison {
    let attempts = [
        (Family::Cmp, fit_cmp(series, ctrl)),
        (Family::Gaussian, fit_gaussian(series)),
        (Family::NegativeBinomial, fit_negative_binomial(series)),
    ];
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (family, outcome) in attempts {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(FamilyFailure {
                family,
                error: e.to_string(),
            }),
        }
    }
    reports.sort_by(|a, b| a.aic.total_cmp(&b.aic).then(a.family.cmp(&b.family)));
    ModelComparison { reports, failures }
}

/// Frequency/pmf overlay of a fitted CMP against the observed counts, one
/// row per integer in the observed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub goals: u64,
    pub empirical: f64,
    pub fitted: f64,
}

pub fn pmf_overlay(series: &GoalSeries, params: CmpParams, ctrl: &SeriesControl) -> Result<Vec<OverlayRow>, CmpError> {
    let dist = Cmp::new(params, ctrl)?;
    let lo = *series.counts.iter().min().unwrap_or(&0);
    let hi = *series.counts.iter().max().unwrap_or(&0);
    let n = series.len() as f64;
    Ok((lo..=hi)
        .map(|x| OverlayRow {
            goals: x,
            empirical: series.counts.iter().filter(|&&c| c == x).count() as f64 / n,
            fitted: dist.pmf(x),
        })
        .collect())
}

/// Log-likelihood of `report`'s parameters on `series`, recomputed from
/// scratch.
pub fn recompute_log_likelihood(series: &GoalSeries, report: &FitReport, ctrl: &SeriesControl) -> Result<f64, CmpError> {
    Ok(match report.params {
        FitParams::Cmp { lambda, nu } => cmp_log_likelihood(series, CmpParams::new(lambda, nu)?, ctrl)?,
        FitParams::Gaussian { mean, sd } => gaussian_log_likelihood(series, mean, sd),
        FitParams::NegativeBinomial { size: Some(size), prob } => negative_binomial_log_likelihood(series, size, prob),
        FitParams::NegativeBinomial { size: None, .. } => poisson_log_likelihood(series, series.mean()),
    })
}

#[cfg(test)]
fn normal_log_density(x: f64, mean: f64, sd: f64) -> f64 {
    -((2.0 * std::f64::consts::PI).sqrt() * sd).ln() - 0.5 * ((x - mean) / sd).powi(2)
}
