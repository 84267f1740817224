use eigenlab_core::cir::{
    cir_boundary_classification, cir_exact_step, integrated_cir_laplace, laplace_phi_psi,
};
use eigenlab_core::collision::first_passage_partial_sum;
use eigenlab_core::stats::rng::domain;
use eigenlab_core::stats::{
    empirical_laplace, gamma_cdf, ks_test, mean_stderr, rng_in_domain, sorted, uniformity_pvalue,
};
use eigenlab_core::{CirBoundary, CirParams, ModelParams, SimConfig};
use rand_distr::{Distribution, Gamma};

/// `∫₀ᵗ r ds` along exact CIR paths, trapezoid rule on step `h`.
fn integrals(cir: &CirParams, r0: f64, h: f64, t: f64, paths: u64, seed: u64) -> Vec<f64> {
    let steps = (t / h).round() as usize;
    (0..paths)
        .map(|i| {
            let mut rng = rng_in_domain(seed, domain::EXACT_CIR, i);
            let (mut r, mut acc) = (r0, 0.0);
            for _ in 0..steps {
                let next = cir_exact_step(cir, r, h, &mut rng).unwrap();
                acc += 0.5 * (r + next) * h;
                r = next;
            }
            acc
        })
        .collect()
}

#[test]
fn laplace_prefactor_is_the_sum_drift() {
    // n = 3 separates nα from 2α
    let p = ModelParams::new(1.0, 0.4, 1.0, 3).unwrap();
    let cir = CirParams::sum_process(&p);
    let (sum0, mu, t) = (3.0, 1.0, 1.0);
    let ints = integrals(&cir, sum0, 1e-2, t, 20_000, 3);
    let emp = empirical_laplace(&ints, mu);
    let closed = integrated_cir_laplace(&p, sum0, mu, t).unwrap().value;
    let z = (emp.estimate - closed) / emp.stderr;
    assert!(z.abs() < 4.0, "z = {z}");

    let (phi, psi) = laplace_phi_psi(p.gamma, mu, t);
    let two_alpha = (-2.0 * p.alpha * phi - sum0 * psi).exp();
    let z_alt = (emp.estimate - two_alpha) / emp.stderr;
    assert!(z_alt.abs() > 10.0, "2α prefactor not rejected, z = {z_alt}");
}

#[test]
fn psi_matches_growing_exponential_form() {
    for (gamma, mu, t) in [
        (1.0f64, 0.5f64, 0.3f64),
        (0.5, 2.0, 1.0),
        (0.0, 1.0, 2.0),
        (2.0, 0.1, 5.0),
    ] {
        let s: f64 = (gamma * gamma + 2.0 * mu).sqrt();
        let e = (2.0 * t * s).exp();
        let psi = mu * (e - 1.0) / (s - gamma + e * (s + gamma));
        let phi = -0.5 * (2.0 * s * ((gamma - s) * t).exp() / ((s - gamma) / e + s + gamma)).ln();
        let (p2, s2) = laplace_phi_psi(gamma, mu, t);
        assert!((psi - s2).abs() < 1e-13 * psi.abs().max(1.0));
        assert!((phi - p2).abs() < 1e-12 * phi.abs().max(1.0));
    }
}

#[test]
fn exact_step_mean_and_transition_law() {
    let cir = CirParams::new(2.5, 1.5, 2.0).unwrap();
    let (r0, dt) = (0.7, 0.4);
    let xs: Vec<f64> = (0..20_000)
        .map(|i| {
            let mut rng = rng_in_domain(9, domain::EXACT_CIR, i);
            cir_exact_step(&cir, r0, dt, &mut rng).unwrap()
        })
        .collect();
    let (m, se) = mean_stderr(&xs);
    let c = eigenlab_core::cir::cir_conditional_mean(&cir, r0, dt);
    assert!((m - c).abs() < 4.0 * se);
    let ks = ks_test(&sorted(xs), |x| {
        eigenlab_core::cir::cir_transition_cdf(&cir, r0, dt, x)
    })
    .unwrap();
    assert!(ks.p > 0.001, "{ks:?}");
}

#[test]
fn ks_pvalues_are_calibrated() {
    let g = Gamma::new(2.0, 1.0).unwrap();
    let mut rng = rng_in_domain(1, domain::MISC, 0);
    let ps: Vec<f64> = (0..400)
        .map(|_| {
            let xs = sorted((0..200).map(|_| g.sample(&mut rng)).collect());
            ks_test(&xs, |x| gamma_cdf(2.0, 1.0, x)).unwrap().p
        })
        .collect();
    assert!(uniformity_pvalue(&ps, 10) > 0.001);
}

/// Fraction of exact CIR paths, monitored on a `dt` grid, that reach `level`.
fn exact_hit_fraction(
    cir: &CirParams,
    r0: f64,
    dt: f64,
    horizon: f64,
    level: f64,
    paths: u64,
) -> f64 {
    let steps = (horizon / dt).round() as usize;
    let hits = (0..paths)
        .filter(|&i| {
            let mut rng = rng_in_domain(21, domain::EXACT_CIR, i);
            let mut r = r0;
            (0..steps).any(|_| {
                r = cir_exact_step(cir, r, dt, &mut rng).unwrap();
                r <= level
            })
        })
        .count();
    hits as f64 / paths as f64
}

#[test]
fn full_sum_first_passage_follows_cir_boundary() {
    let mut c = SimConfig::new(2);
    c.horizon = 20.0;
    c.paths = 400;
    c.dt = 1e-3;
    c.seed = 4;
    c.lambda0 = vec![0.2, 0.6];
    // sum drift nα = 1.2 < 2: the sum reaches zero
    let p = ModelParams::new(0.6, 1.5, 1.0, 2).unwrap();
    assert_eq!(
        cir_boundary_classification(&CirParams::sum_process(&p)),
        CirBoundary::HitsZeroAlmostSurely
    );
    let hits = first_passage_partial_sum(&p, &c, 2).unwrap();
    assert!(hits.iter().all(|h| h.estimate > 0.9), "{hits:?}");

    // nα = 4 >= 2: zero is never reached, small levels only rarely, and at
    // the same rate as for the exact CIR watched on the same grid
    let p = ModelParams::new(2.0, 1.5, 1.0, 2).unwrap();
    let cir = CirParams::sum_process(&p);
    assert_eq!(
        cir_boundary_classification(&cir),
        CirBoundary::NeverHitsZero
    );
    let hits = first_passage_partial_sum(&p, &c, 2).unwrap();
    let exact = exact_hit_fraction(&cir, 0.8, c.dt, c.horizon, 1e-2, 400);
    let se = (exact * (1.0 - exact) / 400.0 * 2.0).sqrt();
    assert!(
        (hits[0].estimate - exact).abs() < 4.0 * se,
        "{} vs exact {exact}",
        hits[0].estimate
    );
    assert!(hits[2].estimate < hits[0].estimate / 4.0, "{hits:?}");
}
