mod common;

use common::*;
use lintraj::adjoint_kalman::*;
use lintraj::linalg::CVec;
use lintraj::state_engine::{apply_evolution, expectation, fock_operators, normalize_and_trace, EvolutionFactors, FockDensityMatrix};
use lintraj::system_model::{builtin_homodyne_thermal, builtin_optomech_squeezing};
use lintraj::trajectory::{sample_ostensible_record, ConditionedSampler};
use lintraj::C64;

#[test]
fn homodyne_kalman_matrices() {
    let g = 1.2;
    let spec = builtin_homodyne_thermal(g, 0.0, 1.0).unwrap();
    let m = kalman_matrices(&spec);
    let s = (g / 2.0).sqrt();
    assert!((m.a[(0, 0)] + g / 2.0).abs() < 1e-14 && (m.a[(1, 1)] + g / 2.0).abs() < 1e-14);
    assert!((m.b[(0, 0)] - s).abs() < 1e-14 && m.b[(0, 1)].abs() < 1e-14);
    assert!((m.s[(0, 0)] - s).abs() < 1e-14);
    assert!((m.e[(0, 0)] - g / 2.0).abs() < 1e-14);
}

#[test]
fn vacuum_is_a_filter_fixed_point() {
    let spec = builtin_homodyne_thermal(1.0, 0.0, 1.0).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 1.0, 1).unwrap();
    let path = forward_filter(&kalman_matrices(&spec), &GaussianMoments::vacuum(1), &rec).unwrap();
    let last = path.last().unwrap();
    assert!((&last.cov - GaussianMoments::vacuum(1).cov).amax() < 1e-12);
}

#[test]
fn homodyne_effect_matches_closed_forms() {
    let (g, k, eta) = (0.9, 0.3, 0.6);
    let spec = builtin_homodyne_thermal(g, k, eta).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 1.5, 17).unwrap();
    let (adj, path) = integrate_backward(&kalman_matrices(&spec), &rec, BackwardScheme::default(), true).unwrap();
    assert_eq!(path.len(), rec.steps() + 1);
    let t = rec.t_final();
    let vxx = 0.5 * (1.0 + 2.0 * k) * (1.0 / (eta * (1.0 - (-g * t).exp())) - 1.0);
    assert!((adj.v[(0, 0)] - vxx).abs() < 1e-10);
    assert!(adj.variances()[1].is_infinite());
    let integral: f64 = (0..rec.steps()).map(|j| (-g * j as f64 * rec.dt / 2.0).exp() * rec.y[(j, 0)] * rec.dt).sum();
    let x = (g * (1.0 + 2.0 * k) / (2.0 * eta)).sqrt() / (1.0 - (-g * t).exp()) * integral;
    assert!((adj.x[0] - x).abs() < 1e-10);
}

#[test]
fn euler_scheme_converges_at_first_order() {
    let spec = builtin_homodyne_thermal(1.0, 0.2, 0.7).unwrap();
    let m = kalman_matrices(&spec);
    let fine = sample_ostensible_record(&spec, 1e-3 / 16.0, 1.0, 4).unwrap();
    let (exact, _) = integrate_backward(&m, &fine, BackwardScheme::default(), false).unwrap();
    // same Brownian path at two resolutions; Euler on the smooth Riccati part converges O(dt)
    let err = |f: usize| {
        let r = fine.coarsen(f);
        let (e, _) = integrate_backward(&m, &r, BackwardScheme::Euler, false).unwrap();
        let (rk, _) = integrate_backward(&m, &r, BackwardScheme::default(), false).unwrap();
        ((e.lambda[(0, 0)] - rk.lambda[(0, 0)]).abs(), (rk.lambda[(0, 0)] - exact.lambda[(0, 0)]).abs())
    };
    let (e1, d1) = err(16);
    let (e2, _) = err(4);
    let ratio = e1 / e2;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    assert!(d1 < 1e-9);
}

#[test]
fn adjoint_agrees_with_povm_for_optomech() {
    let spec = builtin_optomech_squeezing(1.0, 0.8, 0.1, 0.2, 0.5, 0.0).unwrap();
    for seed in 0..3 {
        let rec = sample_ostensible_record(&spec, 1e-3, 2.0, seed).unwrap();
        let out = run_pipeline(&spec, &rec);
        let (adj, _) = integrate_backward(&kalman_matrices(&spec), &rec, BackwardScheme::default(), false).unwrap();
        crosscheck_against_povm(&adj, &out.effect, 1e-8).unwrap();
    }
}

#[test]
fn crosscheck_reports_disagreement() {
    let spec = builtin_homodyne_thermal(1.0, 0.2, 0.7).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 1.0, 3).unwrap();
    let other = sample_ostensible_record(&spec, 1e-3, 1.0, 4).unwrap();
    let out = run_pipeline(&spec, &other);
    let (adj, _) = integrate_backward(&kalman_matrices(&spec), &rec, BackwardScheme::default(), false).unwrap();
    assert_eq!(crosscheck_against_povm(&adj, &out.effect, 1e-8).unwrap_err().kind(), "CrossCheckFailure");
}

#[test]
fn conditioned_state_moments_match_filter() {
    let spec = builtin_homodyne_thermal(1.0, 0.3, 0.8).unwrap();
    let alpha = C64::new(0.8, -0.4);
    let init = GaussianMoments::coherent(&CVec::from_element(1, alpha));
    let sampler = ConditionedSampler::new(&spec, &init, 1e-4, 10_000).unwrap();
    let rec = sampler.sample(21, 0).unwrap();
    let path = forward_filter(&kalman_matrices(&spec), &init, &rec).unwrap();
    let out = run_pipeline(&spec, &rec);
    let blocks = {
        let g = lintraj::parameterization::compute_generator(&spec);
        lintraj::lie_rep::propagator_blocks(&lintraj::lie_rep::rep_of_generator(&g), rec.t_final()).unwrap()
    };
    let f = EvolutionFactors::new(&blocks, &out.integrals).unwrap();
    let rho = normalize_and_trace(&apply_evolution(&FockDensityMatrix::coherent(&[alpha], 25).unwrap(), &f, 1e-8).unwrap()).unwrap().0;
    let (a, ad, _) = fock_operators(25);
    let q = expectation(&rho, &((&a + &ad) * C64::new(1.0 / 2f64.sqrt(), 0.0))).unwrap().re;
    let p = expectation(&rho, &((&ad - &a) * C64::new(0.0, 1.0 / 2f64.sqrt()))).unwrap().re;
    let last = path.last().unwrap();
    println!("state ({q}, {p}) filter {:?}", last.mean);
    assert!((q - last.mean[0]).abs() < 1e-3 && (p - last.mean[1]).abs() < 1e-3);
}
