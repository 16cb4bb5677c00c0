use cmprank::cmp::{sample, CmpParams, SeriesControl};
use cmprank::fitting::{
    aic, compare_models, fit_cmp, fit_gaussian, fit_negative_binomial, recompute_log_likelihood, Family,
    FitDiagnostic, FitParams, GoalSeries,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

mod common;
use common::{grid_optimum, oracle_cmp_ll, oracle_nb_ll};

fn cmp_sample(lambda: f64, nu: f64, n: usize, seed: u64) -> GoalSeries {
    let params = CmpParams::new(lambda, nu).unwrap();
    GoalSeries::new(sample(params, n, seed, &SeriesControl::default()).unwrap(), "synthetic").unwrap()
}

#[test]
fn cmp_fit_beats_brute_force_grid() {
    let series = cmp_sample(40.0, 1.3, 300, 11);
    let fit = fit_cmp(&series, &SeriesControl::default()).unwrap();
    assert!(fit.converged);

    let (best_ll, best_cell) = grid_optimum(series.counts());

    assert!(fit.log_likelihood >= best_ll - 1e-9, "fit {} < grid {}", fit.log_likelihood, best_ll);
    assert!(fit.log_likelihood - best_ll < 0.05);
    let FitParams::Cmp { lambda, nu } = fit.params else { panic!() };
    // The ridge runs along ln λ ≈ ν ln(mode), so compare via the implied mode.
    let (gl, gn) = best_cell;
    assert!(((lambda.ln() / nu) - gl / gn.exp()).abs() < 0.02);
    let at_fit = oracle_cmp_ll(series.counts(), lambda.ln(), nu);
    assert!((at_fit - fit.log_likelihood).abs() < 1e-8);
}

#[test]
fn recovers_dispersion_at_mean_28() {
    for (nu, seed) in [(0.7, 1u64), (1.0, 2), (1.5, 3)] {
        let lambda = 28f64.powf(nu);
        let series = cmp_sample(lambda, nu, 3000, seed);
        let fit = fit_cmp(&series, &SeriesControl::default()).unwrap();
        let FitParams::Cmp { nu: nu_hat, .. } = fit.params else { panic!() };
        assert!(fit.converged);
        assert!((nu_hat / nu - 1.0).abs() < 0.1, "ν={nu}: ν̂={nu_hat}");
    }
}

#[test]
fn poisson_data_gives_unit_dispersion() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let pois = Poisson::new(10.0).unwrap();
    let counts: Vec<u64> = (0..1000).map(|_| pois.sample(&mut rng) as u64).collect();
    let fit = fit_cmp(&GoalSeries::new(counts, "poisson").unwrap(), &SeriesControl::default()).unwrap();
    let FitParams::Cmp { nu, .. } = fit.params else { panic!() };
    assert!((0.85..=1.15).contains(&nu), "ν̂ = {nu}");
}

fn gamma_poisson(r: f64, prob: f64, n: usize, seed: u64) -> Vec<u64> {
    let mean = r * (1.0 - prob) / prob;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(r, mean / r).unwrap();
    (0..n)
        .map(|_| Poisson::new(gamma.sample(&mut rng)).unwrap().sample(&mut rng) as u64)
        .collect()
}

#[test]
fn negative_binomial_recovers_size() {
    let counts = gamma_poisson(20.0, 0.4, 2000, 5);
    let series = GoalSeries::new(counts.clone(), "nb").unwrap();
    let fit = fit_negative_binomial(&series).unwrap();
    assert!(fit.converged);
    let FitParams::NegativeBinomial { size: Some(r), prob } = fit.params else { panic!() };
    assert!((r / 20.0 - 1.0).abs() < 0.15, "r̂ = {r}");
    assert!((prob - r / (r + series.mean())).abs() < 1e-12);

    let grid_best = (0..=20_000)
        .map(|i| oracle_nb_ll(&counts, (5f64.ln() + i as f64 * 1e-4 * (80f64 / 5.0).ln()).exp()))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(fit.log_likelihood >= grid_best - 1e-9);
    assert!((fit.log_likelihood - oracle_nb_ll(&counts, r)).abs() < 1e-8);
}

#[test]
fn negative_binomial_underdispersed_reports_poisson_limit() {
    let series = cmp_sample(28f64.powf(2.0), 2.0, 200, 8);
    let fit = fit_negative_binomial(&series).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.diagnostic, Some(FitDiagnostic::Underdispersed));
    assert!(matches!(fit.params, FitParams::NegativeBinomial { size: None, .. }));
}

#[test]
fn fits_ignore_observation_order() {
    let series = cmp_sample(100.0, 1.4, 60, 9);
    let mut shuffled = series.counts().to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let other = GoalSeries::new(shuffled, "synthetic").unwrap();
    let ctrl = SeriesControl::default();
    assert_eq!(compare_models(&series, &ctrl), compare_models(&other, &ctrl));
}

#[test]
fn aic_order_matches_likelihood_order() {
    let ctrl = SeriesControl::default();
    for seed in 0..6 {
        let series = cmp_sample(20.0 + 30.0 * seed as f64, 1.0 + 0.1 * seed as f64, 80, seed);
        let cmp = compare_models(&series, &ctrl);
        for r in &cmp.reports {
            assert_eq!(r.aic, aic(r.log_likelihood));
            assert_eq!(r.aic, 4.0 - 2.0 * r.log_likelihood);
        }
        for w in cmp.reports.windows(2) {
            assert!(w[0].log_likelihood >= w[1].log_likelihood);
        }
    }
}

#[test]
fn cmp_wins_on_large_cmp_sample() {
    let series = cmp_sample(15.0, 1.5, 5000, 4);
    let cmp = compare_models(&series, &SeriesControl::default());
    assert_eq!(cmp.best().unwrap().family, Family::Cmp);
}

#[test]
fn reported_likelihoods_recompute() {
    let ctrl = SeriesControl::default();
    let series = cmp_sample(60.0, 1.2, 120, 6);
    for report in compare_models(&series, &ctrl).reports {
        let again = recompute_log_likelihood(&series, &report, &ctrl).unwrap();
        assert!((again - report.log_likelihood).abs() < 1e-9, "{:?}", report.family);
    }
}

#[test]
fn gaussian_is_closed_form() {
    let series = GoalSeries::new(vec![20, 25, 31, 28, 22, 30], "g").unwrap();
    let fit = fit_gaussian(&series).unwrap();
    let FitParams::Gaussian { mean, sd } = fit.params else { panic!() };
    assert!((mean - 26.0).abs() < 1e-12);
    let var: f64 = series.counts().iter().map(|&x| (x as f64 - 26.0).powi(2)).sum::<f64>() / 6.0;
    assert!((sd - var.sqrt()).abs() < 1e-12);
}
