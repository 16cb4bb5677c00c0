//! The Conway-Maxwell-Poisson distribution.
//!
//! `P(X = x) = λ^x / (x!)^ν / Z(λ, ν)` on `x ∈ {0, 1, 2, ...}`.
//!
//! The normalizer has no closed form for general `ν`, so it is summed as a
//! series. All arithmetic is carried out relative to the largest term (the
//! series mode `⌊λ^{1/ν}⌋`), which keeps every exponentiated quantity in
//! `(0, 1]` and avoids the overflow of `λ^x` and `(x!)^ν` at handball scales.
//! Summation walks outward from the mode in both directions and stops once a
//! geometric bound on the remaining tail falls below `rel_tol` times the
//! running sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Series modes above this are rejected outright: beyond it the index no
/// longer fits exactly in an `f64` mantissa.
const MAX_MODE: f64 = 1e15;

/// Below this argument `ln Γ` is evaluated directly; above it, differences
/// of log-factorials go through the Stirling expansion.
const STIRLING_MIN: u64 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmpError {
    #[error("invalid CMP parameters: {0}")]
    InvalidParams(String),
    #[error("invalid series control: {0}")]
    InvalidControl(String),
    #[error("normalizing series did not converge within {max_terms} terms (λ = {lambda}, ν = {nu})")]
    SeriesNotConverged { lambda: f64, nu: f64, max_terms: usize },
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
}

/// `(λ, ν)` of a CMP distribution.
///
/// Valid pairs have `λ > 0`, `ν ≥ 0`, and `λ < 1` whenever `ν = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmpParams {
    lambda: f64,
    nu: f64,
}

impl CmpParams {
    pub fn new(lambda: f64, nu: f64) -> Result<Self, CmpError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(CmpError::InvalidParams(format!("λ must be finite and > 0, got {lambda}")));
        }
        if !nu.is_finite() || nu < 0.0 {
            return Err(CmpError::InvalidParams(format!("ν must be finite and ≥ 0, got {nu}")));
        }
        if nu == 0.0 && lambda >= 1.0 {
            return Err(CmpError::InvalidParams(format!(
                "ν = 0 requires λ < 1 (series diverges), got λ = {lambda}"
            )));
        }
        Ok(Self { lambda, nu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Index of the largest series term, `⌊λ^{1/ν}⌋` (0 when `λ ≤ 1` or `ν = 0`).
    pub fn series_mode(&self) -> Option<u64> {
        if self.nu == 0.0 || self.lambda <= 1.0 {
            return Some(0);
        }
        let m = (self.lambda.ln() / self.nu).exp().floor();
        if m.is_finite() && m <= MAX_MODE {
            Some(m as u64)
        } else {
            None
        }
    }
}

/// Truncation settings for the normalizing series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    rel_tol: f64,
    max_terms: usize,
}

impl SeriesControl {
    pub const DEFAULT_REL_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_TERMS: usize = 100_000;
    pub const MIN_MAX_TERMS: usize = 1000;

    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self, CmpError> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(CmpError::InvalidControl(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
        }
        if max_terms < Self::MIN_MAX_TERMS {
            return Err(CmpError::InvalidControl(format!(
                "max_terms must be at least {}, got {max_terms}",
                Self::MIN_MAX_TERMS
            )));
        }
        Ok(Self { rel_tol, max_terms })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: Self::DEFAULT_REL_TOL,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

/// `ln(x!)`.
pub fn ln_factorial(x: u64) -> f64 {
    ln_gamma(x as f64 + 1.0)
}

fn stirling_correction(z: f64) -> f64 {
    let z2 = z * z;
    let z3 = z2 * z;
    1.0 / (12.0 * z) - 1.0 / (360.0 * z3) + 1.0 / (1260.0 * z3 * z2) - 1.0 / (1680.0 * z3 * z2 * z2)
}

/// `ln(x!) − ln(m!)`, accurate to a few ulps of the *result* even when both
/// factorials are astronomically large.
pub fn ln_factorial_ratio(x: u64, m: u64) -> f64 {
    if x == m {
        return 0.0;
    }
    if x.min(m) < STIRLING_MIN {
        return ln_factorial(x) - ln_factorial(m);
    }
    let (xf, mf) = (x as f64, m as f64);
    let d = xf - mf;
    let rel = (d / mf).ln_1p();
    // x ln x − m ln m − d + ½ ln(x/m) + (series(x) − series(m))
    xf * rel + d * mf.ln() - d + 0.5 * rel + (stirling_correction(xf) - stirling_correction(mf))
}

/// A CMP distribution with its normalizer resolved.
///
/// Holds the series window `[lo, hi]` outside of which the neglected mass is
/// below `rel_tol` on each side.
#[derive(Debug, Clone)]
pub struct Cmp {
    params: CmpParams,
    mode: u64,
    ln_lambda: f64,
    /// `ln t_mode = mode·ln λ − ν·ln(mode!)`.
    log_mode_term: f64,
    /// `ln Σ_j t_j / t_mode` over the window.
    log_rel_sum: f64,
    lo: u64,
    /// Relative terms `t_j / t_mode` for `j ∈ [lo, hi]`.
    rel_terms: Vec<f64>,
}

impl Cmp {
    pub fn new(params: CmpParams, ctrl: &SeriesControl) -> Result<Self, CmpError> {
        let not_converged = || CmpError::SeriesNotConverged {
            lambda: params.lambda,
            nu: params.nu,
            max_terms: ctrl.max_terms,
        };
        let mode = params.series_mode().ok_or_else(not_converged)?;
        let ln_lambda = params.lambda.ln();
        let nu = params.nu;

        let rel_log_term = |j: u64| (j as f64 - mode as f64) * ln_lambda - nu * ln_factorial_ratio(j, mode);

        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut sum = 1.0;
        let mut count = 1usize;

        // Upward from the mode; past it the term ratio λ/(j+1)^ν is < 1 and
        // non-increasing, so t_j·r/(1−r) bounds the rest.
        let mut j = mode;
        loop {
            let t = if j == mode { 1.0 } else { rel_log_term(j).exp() };
            if j != mode {
                upper.push(t);
                sum += t;
                count += 1;
            }
            let r = (ln_lambda - nu * ((j + 1) as f64).ln()).exp();
            if r < 1.0 && t * r / (1.0 - r) < ctrl.rel_tol * sum {
                break;
            }
            if count >= ctrl.max_terms {
                return Err(not_converged());
            }
            j += 1;
        }

        // Downward; below the mode t_{j-1}/t_j = j^ν/λ shrinks as j falls.
        let mut j = mode;
        while j > 0 {
            let t = if j == mode { 1.0 } else { rel_log_term(j).exp() };
            let r = (nu * (j as f64).ln() - ln_lambda).exp();
            if r < 1.0 && t * r / (1.0 - r) < ctrl.rel_tol * sum {
                break;
            }
            if count >= ctrl.max_terms {
                return Err(not_converged());
            }
            j -= 1;
            let t = rel_log_term(j).exp();
            lower.push(t);
            sum += t;
            count += 1;
        }

        let lo = mode - lower.len() as u64;
        let mut rel_terms = lower;
        rel_terms.reverse();
        rel_terms.push(1.0);
        rel_terms.extend(upper);
        // Re-sum in index order so the stored log sum matches the table.
        let total: f64 = rel_terms.iter().sum();

        Ok(Self {
            params,
            mode,
            ln_lambda,
            log_mode_term: mode as f64 * ln_lambda - nu * ln_factorial(mode),
            log_rel_sum: total.ln(),
            lo,
            rel_terms,
        })
    }

    pub fn params(&self) -> CmpParams {
        self.params
    }

    /// `ln Z(λ, ν)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_mode_term + self.log_rel_sum
    }

    /// Inclusive range of `x` whose mass was summed into the normalizer.
    pub fn support(&self) -> (u64, u64) {
        (self.lo, self.lo + self.rel_terms.len() as u64 - 1)
    }

    pub fn log_pmf(&self, x: u64) -> f64 {
        (x as f64 - self.mode as f64) * self.ln_lambda - self.params.nu * ln_factorial_ratio(x, self.mode)
            - self.log_rel_sum
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.log_pmf(x).exp()
    }

    /// Probabilities over [`Cmp::support`], in order.
    pub fn pmf_table(&self) -> Vec<f64> {
        let total = self.log_rel_sum.exp();
        self.rel_terms.iter().map(|t| t / total).collect()
    }

    /// `(E[X], V[X])` by summation over the window, centred on the mode.
    pub fn mean_and_variance(&self) -> (f64, f64) {
        let total = self.log_rel_sum.exp();
        let offset = self.lo as f64 - self.mode as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, t) in self.rel_terms.iter().enumerate() {
            let d = offset + i as f64;
            let p = t / total;
            m1 += d * p;
            m2 += d * d * p;
        }
        (self.mode as f64 + m1, m2 - m1 * m1)
    }

    /// `n` draws by inversion of the cumulative pmf.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        let mut cdf = Vec::with_capacity(self.rel_terms.len());
        let mut acc = 0.0;
        for t in &self.rel_terms {
            acc += t;
            cdf.push(acc);
        }
        let last = cdf.len() - 1;
        (0..n)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(last);
                self.lo + idx as u64
            })
            .collect()
    }
}

/// `ln Z(λ, ν) = ln Σ_{j≥0} λ^j / (j!)^ν`.
pub fn log_normalizer(params: CmpParams, ctrl: &SeriesControl) -> Result<f64, CmpError> {
    Ok(Cmp::new(params, ctrl)?.log_normalizer())
}

pub fn log_pmf(x: u64, params: CmpParams, ctrl: &SeriesControl) -> Result<f64, CmpError> {
    Ok(Cmp::new(params, ctrl)?.log_pmf(x))
}

pub fn mean_and_variance(params: CmpParams, ctrl: &SeriesControl) -> Result<(f64, f64), CmpError> {
    Ok(Cmp::new(params, ctrl)?.mean_and_variance())
}

/// Deterministic for a given `seed`.
pub fn sample(params: CmpParams, n: usize, seed: u64, ctrl: &SeriesControl) -> Result<Vec<u64>, CmpError> {
    let dist = Cmp::new(params, ctrl)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dist.sample(n, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispersion {
    Over,
    Equi,
    Under,
}

impl Dispersion {
    pub fn classify(index: f64) -> Self {
        if index < 1.0 {
            Dispersion::Over
        } else if index > 1.0 {
            Dispersion::Under
        } else {
            Dispersion::Equi
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Dispersion::Over => "over-dispersion",
            Dispersion::Equi => "equi-dispersion",
            Dispersion::Under => "under-dispersion",
        }
    }
}

/// Mean over variance: below 1 is over-dispersed, above 1 under-dispersed.
pub fn dispersion_index(mean: f64, variance: f64) -> Result<f64, CmpError> {
    if !(variance > 0.0) {
        return Err(CmpError::NonPositiveVariance(variance));
    }
    Ok(mean / variance)
}
