//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's series code.

#![allow(dead_code)]

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

/// Straight summation from zero with a running log-factorial. Stops once
/// past the mode and 40 nats below the peak.
pub fn oracle_log_z(ln_lambda: f64, nu: f64) -> f64 {
    let mode = (ln_lambda / nu).exp();
    let (mut peak, mut acc) = (f64::NEG_INFINITY, 0.0);
    let mut lf = 0.0;
    let mut j = 0u64;
    loop {
        if j > 0 {
            lf += (j as f64).ln();
        }
        let t = j as f64 * ln_lambda - nu * lf;
        if t > peak {
            acc = acc * (peak - t).exp() + 1.0;
            peak = t;
        } else {
            acc += (t - peak).exp();
        }
        if j as f64 > mode && t < peak - 40.0 {
            return peak + acc.ln();
        }
        j += 1;
    }
}

fn log_term(x: f64, ln_lambda: f64, nu: f64) -> f64 {
    x * ln_lambda - nu * ln_gamma(x + 1.0)
}

pub fn oracle_cmp_ll(counts: &[u64], ln_lambda: f64, nu: f64) -> f64 {
    let n = counts.len() as f64;
    let total: u64 = counts.iter().sum();
    let sum_lf: f64 = counts.iter().map(|&x| ln_gamma(x as f64 + 1.0)).sum();
    total as f64 * ln_lambda - nu * sum_lf - n * oracle_log_z(ln_lambda, nu)
}

/// Upper bound on the log-likelihood from `Z ≥` the largest single term.
fn cmp_ll_bound(counts: &[u64], ln_lambda: f64, nu: f64) -> f64 {
    let mode = (ln_lambda / nu).exp().floor();
    let peak = log_term(mode, ln_lambda, nu).max(log_term(mode + 1.0, ln_lambda, nu));
    counts.iter().map(|&x| log_term(x as f64, ln_lambda, nu) - peak).sum()
}

/// Best log-likelihood over ln λ ∈ [−1, 7] × ln ν ∈ [−2, 2] at step 0.01,
/// with its cell. Cells with a large mode are first screened with
/// [`cmp_ll_bound`] and only summed if they could beat the incumbent.
pub fn grid_optimum(counts: &[u64]) -> (f64, (f64, f64)) {
    const CHEAP_MODE: f64 = 500.0;
    let cells: Vec<(f64, f64)> = (0..=800)
        .flat_map(|i| (0..=400).map(move |k| (-1.0 + 0.01 * i as f64, -2.0 + 0.01 * k as f64)))
        .collect();
    let mode = |&(ll, ln_nu): &(f64, f64)| (ll / ln_nu.exp()).exp();
    let best = |a: (f64, (f64, f64)), b: (f64, (f64, f64))| if b.0 > a.0 { b } else { a };
    let none = || (f64::NEG_INFINITY, (0.0, 0.0));

    let cheap = cells
        .par_iter()
        .filter(|c| mode(c) <= CHEAP_MODE)
        .map(|&(ll, ln_nu)| (oracle_cmp_ll(counts, ll, ln_nu.exp()), (ll, ln_nu)))
        .reduce(none, best);
    let rest = cells
        .par_iter()
        .filter(|c| mode(c) > CHEAP_MODE)
        .filter(|&&(ll, ln_nu)| cmp_ll_bound(counts, ll, ln_nu.exp()) > cheap.0)
        .map(|&(ll, ln_nu)| (oracle_cmp_ll(counts, ll, ln_nu.exp()), (ll, ln_nu)))
        .reduce(none, best);
    best(cheap, rest)
}

/// Negative Binomial log-likelihood with `p = r / (r + mean)`.
pub fn oracle_nb_ll(counts: &[u64], r: f64) -> f64 {
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let p = r / (r + mean);
    counts
        .iter()
        .map(|&x| {
            let x = x as f64;
            ln_gamma(x + r) - ln_gamma(r) - ln_gamma(x + 1.0) + r * p.ln() + x * (1.0 - p).ln()
        })
        .sum()
}

/// Mean and variance by direct summation from zero, for moderate modes.
pub fn oracle_cmp_moments(lambda: f64, nu: f64) -> (f64, f64) {
    let ln_lambda = lambda.ln();
    let mode = lambda.powf(1.0 / nu);
    let hi = (mode + 40.0 * (mode / nu).sqrt() + 200.0) as u64;
    let logs: Vec<f64> = (0..=hi).map(|x| log_term(x as f64, ln_lambda, nu)).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let z: f64 = w.iter().sum();
    let mean = w.iter().enumerate().map(|(x, p)| x as f64 * p).sum::<f64>() / z;
    let var = w.iter().enumerate().map(|(x, p)| (x as f64 - mean).powi(2) * p).sum::<f64>() / z;
    (mean, var)
}
