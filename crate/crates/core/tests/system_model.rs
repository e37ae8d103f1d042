mod common;

use common::*;
use lintraj::linalg::{max_abs, max_abs_real, CMat};
use lintraj::system_model::*;
use lintraj::{RMat, C64};
use proptest::prelude::*;

#[test]
fn builtins_reject_bad_parameters() {
    assert_eq!(builtin_homodyne_thermal(1.0, 0.0, 1.5).unwrap_err().kind(), "MeasurementSettingInvalid");
    assert_eq!(builtin_homodyne_thermal(-1.0, 0.0, 0.5).unwrap_err().kind(), "ParameterOutOfRange");
    assert_eq!(builtin_optomech_squeezing(1.0, 0.5, 0.1, -0.2, 0.0, 0.0).unwrap_err().kind(), "ParameterOutOfRange");
}

#[test]
fn shape_mismatch_is_reported() {
    let err = SystemSpec::new(RMat::zeros(2, 2), CMat::zeros(1, 4), CMat::zeros(1, 2)).unwrap_err();
    assert_eq!(err.kind(), "DimensionMismatch");
}

#[test]
fn non_hermitian_fock_hamiltonian_rejected() {
    let f = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    let err = from_fock_form(&FockFormSpec { f, z: CMat::zeros(1, 2), m: CMat::zeros(1, 2) }).unwrap_err();
    assert_eq!(err.kind(), "NonHermitianF");
}

#[test]
fn homodyne_efficiency_is_recovered() {
    let s = builtin_homodyne_thermal(0.7, 0.3, 0.45).unwrap();
    assert!((s.efficiencies()[0] - 0.45).abs() < 1e-15);
    assert_eq!(s.monitored(), vec![true, false, false, false]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_fock_form_roundtrip(seed in 0u64..1_000_000, n in 1usize..=3, l in 1usize..=3) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, n, l, 1.0);
        let back = from_fock_form(&to_fock_form(&spec)).unwrap();
        prop_assert!(max_abs_real(&(&back.g - &spec.g)) < 1e-12 * (1.0 + max_abs_real(&spec.g)));
        prop_assert!(max_abs(&(&back.c - &spec.c)) < 1e-12 * (1.0 + max_abs(&spec.c)));
        prop_assert_eq!(back.m, spec.m);
    }

    #[test]
    fn prop_efficiencies_bounded(seed in 0u64..1_000_000, l in 1usize..=4) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, 1, l, 1.0);
        prop_assert!(spec.efficiencies().iter().all(|&e| (-1e-12..=1.0 + 1e-12).contains(&e)));
    }
}
