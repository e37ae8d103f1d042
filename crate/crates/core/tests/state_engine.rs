mod common;

use common::*;
use lintraj::linalg::{max_abs, CMat};
use lintraj::oracle_sme::integrate_linear_sme;
use lintraj::state_engine::*;
use lintraj::system_model::builtin_homodyne_thermal;
use lintraj::trajectory::{sample_ostensible_record, MeasurementRecord};
use lintraj::C64;

fn evolve(spec: &lintraj::system_model::SystemSpec, rec: &MeasurementRecord) -> EvolutionFactors {
    let out = run_pipeline(spec, rec);
    let table_blocks = {
        use lintraj::lie_rep::{propagator_blocks, rep_of_generator};
        let g = lintraj::parameterization::compute_generator(spec);
        propagator_blocks(&rep_of_generator(&g), rec.t_final()).unwrap()
    };
    EvolutionFactors::new(&table_blocks, &out.integrals).unwrap()
}

#[test]
fn ladder_matrices() {
    let (a, _, _) = fock_operators(2);
    assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
    assert_eq!(max_abs(&(a.clone() - CMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(|x| C64::new(x, 0.0))))), 0.0);
    let (_, _, n) = fock_operators(3);
    assert_eq!(n[(2, 2)].re, 2.0);
    let (a, ad, _) = fock_operators(10);
    let defect = &a * &ad - &ad * &a - CMat::identity(10, 10);
    assert!((defect[(9, 9)].re + 10.0).abs() < 1e-12);
    assert!(max_abs(&defect.view((0, 0), (9, 9)).into_owned()) < 1e-12);
}

#[test]
fn identity_factors_leave_state_unchanged() {
    let rho = FockDensityMatrix::coherent(&[C64::new(0.7, -0.2)], 12).unwrap();
    let out = apply_evolution(&rho, &EvolutionFactors::identity(1), 1.0).unwrap();
    assert!(max_abs(&(&out.rho - &rho.rho)) < 1e-15);
}

#[test]
fn coherent_expectation_recovers_amplitude() {
    let al = C64::new(0.6, 0.3);
    let rho = FockDensityMatrix::coherent(&[al], 16).unwrap();
    let (a, _, _) = fock_operators(16);
    assert!((expectation(&rho, &a).unwrap() - al).norm() < 1e-6);
}

#[test]
fn series_route_agrees_with_superoperator_route() {
    let spec = builtin_homodyne_thermal(1.0, 0.4, 0.7).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 0.8, 11).unwrap();
    let f = evolve(&spec, &rec);
    for rho0 in [FockDensityMatrix::vacuum(1, 30), FockDensityMatrix::coherent(&[C64::new(0.8, 0.4)], 30).unwrap()] {
        let a = apply_evolution(&rho0, &f, 1e-6).unwrap();
        let b = apply_evolution_series(&rho0, &f, 1e-6).unwrap();
        let err = max_abs(&(&a.rho - &b.rho)) / max_abs(&a.rho);
        println!("series vs sparse {err:e}");
        assert!(err < 1e-8);
    }
}

#[test]
fn pipeline_state_matches_linear_sme_oracle() {
    let spec = builtin_homodyne_thermal(1.0, 0.3, 0.8).unwrap();
    let rec = sample_ostensible_record(&spec, 2e-4, 1.0, 4).unwrap();
    let f = evolve(&spec, &rec);
    let rho0 = FockDensityMatrix::coherent(&[C64::new(0.9, -0.5)], 24).unwrap();
    let a = apply_evolution(&rho0, &f, 1e-8).unwrap();
    let o = integrate_linear_sme(&spec, &rho0, &rec, 1e-8).unwrap();
    let (an, atr) = normalize_and_trace(&a).unwrap();
    let (on, otr) = normalize_and_trace(&o).unwrap();
    let full_tr = atr * f.log_weight.exp().re;
    println!("dist {:e} traces {full_tr} {otr} w={}", trace_distance(&an.rho, &on.rho), f.log_weight);
    assert!(trace_distance(&an.rho, &on.rho) < 1e-2);
    assert!((full_tr / otr - 1.0).abs() < 2e-2);
}

#[test]
fn pure_unravelling_keeps_purity() {
    let spec = builtin_homodyne_thermal(1.0, 0.0, 1.0).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 1.0, 9).unwrap();
    let f = evolve(&spec, &rec);
    let rho0 = FockDensityMatrix::coherent(&[C64::new(1.0, 0.5)], 30).unwrap();
    let out = apply_evolution(&rho0, &f, 1e-8).unwrap();
    assert!((purity(&out.rho) - 1.0).abs() < 1e-6);
}

#[test]
fn record_weight_matches_coherent_trace() {
    use lintraj::linalg::CVec;
    use lintraj::povm::coherent_log_weight;
    let spec = builtin_homodyne_thermal(1.0, 0.4, 0.7).unwrap();
    let rec = sample_ostensible_record(&spec, 1e-3, 1.0, 12).unwrap();
    let out = run_pipeline(&spec, &rec);
    let f = evolve(&spec, &rec);
    let al = C64::new(0.5, -0.4);
    let rho = apply_evolution(&FockDensityMatrix::coherent(&[al], 30).unwrap(), &f, 1e-8).unwrap();
    let fock = (rho.trace() * f.log_weight.exp()).re;
    let w = coherent_log_weight(&out.integrals, &out.povm, &out.effect.d, &CVec::from_element(1, al)).exp();
    assert!((fock / w.re - 1.0).abs() < 1e-8, "{fock} vs {w}");
    assert!(w.im.abs() < 1e-10 * w.norm());
}
