mod common;

use common::*;
use lintraj::lie_rep::{povm_blocks, propagator_blocks, rep_of_generator};
use lintraj::linalg::{CMat, CVec, RMat};
use lintraj::parameterization::compute_generator;
use lintraj::povm::*;
use lintraj::state_engine::min_eigenvalue;
use lintraj::system_model::{builtin_homodyne_thermal, builtin_optomech_squeezing};
use lintraj::trajectory::sample_ostensible_record;
use lintraj::C64;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn scalar_effect(l: C64, lb: C64, d: C64) -> GaussianEffect {
    effect_from_params(&CMat::from_element(1, 1, l), &CMat::from_element(1, 1, lb), &CVec::from_element(1, d)).unwrap()
}

#[test]
fn homodyne_pipeline_matches_closed_form() {
    for &(g, k, eta, t) in &[(1.0, 0.0, 1.0, 2f64.ln()), (1.3, 0.4, 0.7, 1.1), (0.6, 1.5, 0.3, 2.5)] {
        let spec = builtin_homodyne_thermal(g, k, eta).unwrap();
        let rec = sample_ostensible_record(&spec, t / 200.0, t, 7).unwrap();
        let out = run_pipeline(&spec, &rec);
        let cf = homodyne_closed_form(g, k, eta, &rec);
        let lpp = out.effect.lpp[(0, 0)];
        let lb = out.effect.lpp_breve[(0, 0)];
        assert!((lpp.re - cf.lpp).abs() < 1e-10 && lpp.im.abs() < 1e-10);
        assert!((lb.re - cf.lpp_breve).abs() < 1e-10);
        assert!((out.effect.d[0].re - cf.d).abs() < 1e-9 && out.effect.d[0].im.abs() < 1e-9);
    }
}

#[test]
fn pure_unravelling_quarter() {
    assert!((homodyne_lpp(1.0, 0.0, 1.0, 2f64.ln()) + 0.25).abs() < 1e-15);
    assert!((homodyne_lpp(2.0, 0.0, 1.0, 2f64.ln() / 2.0) + 0.25).abs() < 1e-15);
}

#[test]
fn no_detection_gives_flat_effect() {
    let spec = builtin_homodyne_thermal(1.0, 0.3, 0.0).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-2, 1.0, 1).unwrap();
    let cf = homodyne_closed_form(1.0, 0.3, 0.0, &rec);
    assert_eq!((cf.lpp, cf.d), (-0.0, 0.0));
    let out = run_pipeline(&spec, &rec);
    assert!(out.effect.is_flat);
    assert!(out.effect.lpp.camax() < 1e-14 && out.effect.d.camax() < 1e-14);
}

#[test]
fn zero_time_effect_is_flat() {
    let e = scalar_effect(c(0.0), c(0.0), c(0.0));
    assert!(e.is_flat);
    assert_eq!(q_density(&e, &CVec::from_element(1, C64::new(3.0, -1.0))), 1.0);
}

#[test]
fn information_without_curvature_is_rejected() {
    let err = effect_from_params(&CMat::zeros(1, 1), &CMat::zeros(1, 1), &CVec::from_element(1, c(0.3))).unwrap_err();
    assert_eq!(err.kind(), "SingularInformationMatrix");
}

#[test]
fn density_peaks_at_mean() {
    let e = scalar_effect(C64::new(-0.1, 0.03), c(-0.3), C64::new(0.4, -0.2));
    let m = e.alpha_mean.clone();
    let p0 = q_density(&e, &m);
    for dz in [C64::new(1e-3, 0.0), C64::new(0.0, 1e-3), C64::new(-2e-3, 1e-3)] {
        assert!(q_density(&e, &(&m + CVec::from_element(1, dz))) < p0);
    }
}

#[test]
fn fock_operator_reproduces_q_function() {
    let e = scalar_effect(C64::new(-0.12, 0.05), c(-0.2), C64::new(0.3, 0.1));
    let dim = 40;
    let w = effect_operator_fock(&e, dim).unwrap();
    assert!((&w - w.adjoint()).camax() < 1e-12);
    assert!(min_eigenvalue(&w) > -1e-8);
    for al in [C64::new(0.0, 0.0), C64::new(0.5, -0.3), C64::new(-1.0, 0.7)] {
        let coh = lintraj::state_engine::FockDensityMatrix::coherent(&[al], dim).unwrap();
        let fock = (&w * &coh.rho).trace().re;
        let exact = q_density(&e, &CVec::from_element(1, al));
        assert!((fock - exact).abs() < 1e-6, "{fock} vs {exact}");
    }
}

#[test]
fn effect_operator_is_positive_across_grid() {
    for &(g, k, eta, t) in &[(1.0, 0.0, 1.0, 0.5), (1.0, 0.5, 0.5, 2.0), (2.0, 1.0, 0.9, 0.3)] {
        let l = homodyne_lpp(g, k, eta, t);
        let e = scalar_effect(c(l), c(l), c(0.2));
        let w = effect_operator_fock(&e, 40).unwrap();
        assert!(min_eigenvalue(&w) > -1e-8);
    }
    let cf = optomech_closed_form(0.8, 0.1, 0.45, 0.5, Some(2.0)).unwrap();
    let e = scalar_effect(c(cf.lpp), c(cf.lpp_breve), C64::new(0.1, -0.2));
    assert!(min_eigenvalue(&effect_operator_fock(&e, 40).unwrap()) > -1e-8);
}

#[test]
fn completeness_sum_rule() {
    // ∫ Tr[W_d ρ] d²d = 1 for a non-Gaussian state, optomech effect (full rank)
    let cf = optomech_closed_form(0.8, 0.1, 0.45, 0.5, Some(2.0)).unwrap();
    let rho = lintraj::state_engine::FockDensityMatrix::fock(&[1], 30).unwrap();
    let h = 0.05;
    let mut total = 0.0;
    for i in -60..=60 {
        for j in -60..=60 {
            let d = C64::new(i as f64 * h, j as f64 * h);
            let e = scalar_effect(c(cf.lpp), c(cf.lpp_breve), d);
            total += effect_operator_fock(&e, 30).unwrap()[(1, 1)].re * h * h;
        }
    }
    assert!((total - 1.0).abs() < 1e-3, "{total}");
    let _ = rho;
    // homodyne effect is rank one: only Re d carries information
    let l = homodyne_lpp(1.0, 0.2, 0.8, 1.0);
    let mut total = 0.0;
    for i in -400..=400 {
        let e = scalar_effect(c(l), c(l), c(i as f64 * 0.01));
        total += effect_operator_fock(&e, 30).unwrap()[(1, 1)].re * 0.01;
    }
    assert!((total - 1.0).abs() < 1e-3, "{total}");
}

#[test]
fn posterior_limits() {
    let e = scalar_effect(C64::new(-0.1, 0.02), c(-0.3), C64::new(0.4, -0.2));
    let flat = retrodict_posterior(&e, &Prior::Flat).unwrap();
    assert!((&flat.mean - &e.alpha_mean).camax() < 1e-14);
    let m0 = CVec::from_element(1, C64::new(1.0, 2.0));
    let sharp = retrodict_posterior(&e, &Prior::Gaussian { mean: m0.clone(), cov: RMat::identity(2, 2) * 1e-10 }).unwrap();
    assert!((&sharp.mean - &m0).camax() < 1e-8);
    let homo = scalar_effect(c(-0.2), c(-0.2), c(0.3));
    let p = retrodict_posterior(&homo, &Prior::Flat).unwrap();
    assert_eq!(p.uninformative.len(), 1);
    assert!(p.uninformative[0][0].abs() < 1e-12);
}

#[test]
fn optomech_pipeline_variances() {
    let (mu, eta, g, kth, chi) = (1.0, 0.8, 0.1, 0.2, 0.5);
    let spec = builtin_optomech_squeezing(mu, eta, g, kth, chi, 0.0).unwrap();
    let (mu_p, k) = (mu * eta, kth + mu * (1.0 - eta) / g);
    let t = 3.0;
    let b = propagator_blocks(&rep_of_generator(&compute_generator(&spec)), t).unwrap();
    let pb = povm_blocks(&b).unwrap();
    let cf = optomech_closed_form(mu_p, g, k, chi, Some(t)).unwrap();
    assert!((pb.lpp()[(0, 0)].re - cf.lpp).abs() < 1e-10);
    assert!((pb.lpp_breve()[(0, 0)].re - cf.lpp_breve).abs() < 1e-10);
    let e = effect_from_blocks(&pb, &CVec::from_element(1, c(0.0))).unwrap();
    let post = retrodict_posterior(&e, &Prior::Flat).unwrap();
    // σ² refers to the quadrature √2 Re α
    assert!((2.0 * post.cov[(0, 0)] - cf.sigma_x2).abs() < 1e-10);
    assert!((2.0 * post.cov[(1, 1)] - cf.sigma_p2).abs() < 1e-10);
    assert!(cf.sigma_p2 < cf.sigma_x2);
    let sym = optomech_closed_form(mu_p, g, k, 0.0, Some(t)).unwrap();
    assert!((sym.sigma_x2 - sym.sigma_p2).abs() < 1e-14);
}

#[test]
fn optomech_long_time_d() {
    let (mu, eta, g, kth, chi) = (1.0, 0.8, 0.1, 0.2, 0.5);
    let spec = builtin_optomech_squeezing(mu, eta, g, kth, chi, 0.0).unwrap();
    let (mu_p, k) = (mu * eta, kth + mu * (1.0 - eta) / g);
    let rec = sample_ostensible_record(&spec, 1e-3, 10.0, 5).unwrap();
    let out = run_pipeline(&spec, &rec);
    let d = optomech_d(mu_p, g, k, chi, &rec).unwrap();
    assert!((out.effect.d[0] - d).norm() < 1e-5 * d.norm().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_effect_structure(seed in 0u64..10_000, t in 0.05f64..2.0) {
        let mut r = rng(seed);
        let n = 1 + (seed % 2) as usize;
        let spec = random_spec(&mut r, n, 2, 0.6);
        let b = propagator_blocks(&rep_of_generator(&compute_generator(&spec)), t).unwrap();
        let pb = povm_blocks(&b).unwrap();
        let (l, lb) = (pb.lpp(), pb.lpp_breve());
        prop_assert!((&l - l.transpose()).camax() < 1e-10);
        prop_assert!((&lb - lb.adjoint()).camax() < 1e-10);
        // implied information matrix is positive semidefinite
        let tm = information_matrix(&l, &lb);
        let ev = nalgebra::SymmetricEigen::new(tm.clone()).eigenvalues;
        prop_assert!(ev.min() > -1e-9 * ev.amax().max(1.0));
    }

    #[test]
    fn prop_homodyne_routes_agree(g in 0.1f64..3.0, k in 0.0f64..3.0, eta in 0.0f64..1.0, gt in 0.01f64..4.0) {
        let spec = builtin_homodyne_thermal(g, k, eta).unwrap();
        let t = gt / g;
        let b = propagator_blocks(&rep_of_generator(&compute_generator(&spec)), t).unwrap();
        let pb = povm_blocks(&b).unwrap();
        let l = homodyne_lpp(g, k, eta, t);
        prop_assert!((pb.lpp()[(0, 0)] - c(l)).norm() < 1e-10);
        prop_assert!((pb.lpp_breve()[(0, 0)] - c(l)).norm() < 1e-10);
    }
}
