//! Derivative-free minimisers used by the likelihood fits.

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop once `max f − min f` over the simplex drops below this.
    pub f_spread_tol: f64,
    pub max_iterations: usize,
    /// Edge length of the initial (and each restart) simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_spread_tol: 1e-9,
            max_iterations: 500,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn evaluate<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn initial_simplex<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: f64) -> Vec<(Vec<f64>, f64)> {
    let mut simplex = Vec::with_capacity(x0.len() + 1);
    simplex.push((x0.to_vec(), evaluate(f, x0)));
    for i in 0..x0.len() {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = evaluate(f, &x);
        simplex.push((x, v));
    }
    simplex
}

fn sort_simplex(simplex: &mut [(Vec<f64>, f64)]) {
    // Stable sort keeps ties in insertion order, so runs are reproducible.
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}

fn blend(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
}

/// Minimises `f` from `x0` with the Nelder–Mead simplex method.
///
/// Non-finite objective values are treated as `+∞`. After the spread test
/// first fires the simplex is rebuilt around the best vertex; the search
/// only reports convergence if the restarted simplex also collapses without
/// finding a better point. Deterministic: no randomness is involved.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    assert!(n >= 1, "nelder_mead needs at least one coordinate");

    let mut simplex = initial_simplex(&mut f, x0, opts.initial_step);
    let mut iterations = 0;
    let mut restarted_from: Option<f64> = None;

    loop {
        sort_simplex(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;

        if worst.is_finite() && worst - best < opts.f_spread_tol {
            match restarted_from {
                Some(prev) if prev - best < opts.f_spread_tol => {
                    return Minimum {
                        x: simplex[0].0.clone(),
                        value: best,
                        iterations,
                        converged: true,
                    };
                }
                _ => {
                    restarted_from = Some(best);
                    let x_best = simplex[0].0.clone();
                    simplex = initial_simplex(&mut f, &x_best, opts.initial_step);
                    continue;
                }
            }
        }
        if iterations >= opts.max_iterations {
            return Minimum {
                x: simplex[0].0.clone(),
                value: best,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst_x = simplex[n].0.clone();

        let reflected = blend(&centroid, &worst_x, -REFLECT);
        let f_reflected = evaluate(&mut f, &reflected);

        if f_reflected < simplex[0].1 {
            let expanded = blend(&centroid, &worst_x, -EXPAND);
            let f_expanded = evaluate(&mut f, &expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
            continue;
        }

        let (contracted, f_contracted) = if f_reflected < worst {
            let x = blend(&centroid, &reflected, CONTRACT);
            let v = evaluate(&mut f, &x);
            (x, v)
        } else {
            let x = blend(&centroid, &worst_x, CONTRACT);
            let v = evaluate(&mut f, &x);
            (x, v)
        };
        if f_contracted < worst.min(f_reflected) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }

        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = blend(&best_x, &vertex.0, SHRINK);
            let v = evaluate(&mut f, &x);
            *vertex = (x, v);
        }
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min, iterations)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (hi - lo).abs() > x_tol && iterations < 200 {
        iterations += 1;
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx, iterations)
}
