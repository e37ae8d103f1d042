use lintraj::linalg::CMat;
use lintraj::oracle_sme::*;
use lintraj::state_engine::{expectation, fock_operators, normalize_and_trace, purity, trace_distance, FockDensityMatrix};
use lintraj::system_model::builtin_homodyne_thermal;
use lintraj::trajectory::MeasurementRecord;
use lintraj::{RMat, C64};

#[test]
fn coherent_amplitude_decays() {
    let spec = builtin_homodyne_thermal(1.0, 0.0, 0.5).unwrap();
    let al = C64::new(1.0, 0.5);
    let rho0 = FockDensityMatrix::coherent(&[al], 20).unwrap();
    let out = integrate_me(&spec, &rho0, &IntegratorConfig::new(1e-2, 2.0, 20)).unwrap();
    let (a, _, _) = fock_operators(20);
    let m = expectation(&out, &a).unwrap();
    assert!((m - al * (-1.0f64).exp()).norm() < 1e-6);
}

#[test]
fn thermal_fixed_point() {
    let spec = builtin_homodyne_thermal(1.0, 2.0, 0.5).unwrap();
    let rho0 = FockDensityMatrix::vacuum(1, 40);
    let out = integrate_me(&spec, &rho0, &IntegratorConfig { tail_tol: 1e-3, ..IntegratorConfig::new(2e-3, 20.0, 40) }).unwrap();
    let (_, _, n) = fock_operators(40);
    let nbar = expectation(&out, &n).unwrap().re;
    assert!((nbar - 2.0).abs() < 1e-4, "{nbar}");
}

#[test]
fn unitary_evolution_preserves_purity() {
    let mut spec = builtin_homodyne_thermal(1.0, 0.0, 0.0).unwrap();
    spec.c = CMat::zeros(spec.c.nrows(), spec.c.ncols());
    spec.g = RMat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
    let rho0 = FockDensityMatrix::coherent(&[C64::new(0.5, 0.0)], 20).unwrap();
    let out = integrate_me(&spec, &rho0, &IntegratorConfig::new(1e-2, 1.0, 20)).unwrap();
    assert!((purity(&out.rho) - 1.0).abs() < 1e-8);
}

#[test]
fn vacuum_is_dark_for_zero_temperature() {
    let spec = builtin_homodyne_thermal(1.0, 0.0, 1.0).unwrap();
    let rho0 = FockDensityMatrix::vacuum(1, 10);
    let cfg = IntegratorConfig { seed: 3, ..IntegratorConfig::new(1e-3, 1.0, 10) };
    let (_, rec) = integrate_nonlinear_sme(&spec, &FockDensityMatrix::coherent(&[C64::new(0.3, 0.0)], 10).unwrap(), &cfg).unwrap();
    let out = integrate_linear_sme(&spec, &rho0, &rec, 1e-8).unwrap();
    let (n, _) = normalize_and_trace(&out).unwrap();
    assert!(trace_distance(&n.rho, &rho0.rho) < 1e-12);
}

#[test]
fn unmonitored_record_reduces_to_master_equation() {
    let spec = builtin_homodyne_thermal(1.0, 0.5, 0.7).unwrap();
    let rho0 = FockDensityMatrix::coherent(&[C64::new(0.6, 0.2)], 20).unwrap();
    let rec = MeasurementRecord { dt: 1e-3, y: RMat::zeros(500, 4), seed: 0, mode: lintraj::trajectory::StatisticsMode::Ostensible };
    let mut spec0 = spec.clone();
    spec0.m = CMat::zeros(2, 4);
    let lin = integrate_linear_sme(&spec0, &rho0, &rec, 1e-8).unwrap();
    let me = integrate_me(&spec, &rho0, &IntegratorConfig::new(1e-3, 0.5, 20)).unwrap();
    assert!(trace_distance(&lin.rho, &me.rho) < 1e-3);
}

#[test]
fn nonlinear_and_linear_routes_agree() {
    let spec = builtin_homodyne_thermal(1.0, 0.2, 0.8).unwrap();
    let rho0 = FockDensityMatrix::fock(&[1], 16).unwrap();
    let cfg = IntegratorConfig { seed: 7, ..IntegratorConfig::new(1e-4, 0.5, 16) };
    let (nl, rec) = integrate_nonlinear_sme(&spec, &rho0, &cfg).unwrap();
    let lin = normalize_and_trace(&integrate_linear_sme(&spec, &rho0, &rec, 1e-8).unwrap()).unwrap().0;
    assert!(trace_distance(&nl.rho, &lin.rho) < 1e-5);
    assert!((nl.trace().re - 1.0).abs() < 1e-8);
}

#[test]
fn pure_unravelling_stays_pure() {
    let spec = builtin_homodyne_thermal(1.0, 0.0, 1.0).unwrap();
    let rho0 = FockDensityMatrix::fock(&[1], 12).unwrap();
    let cfg = IntegratorConfig { seed: 1, scheme: OracleScheme::Milstein, ..IntegratorConfig::new(1e-4, 1.0, 12) };
    let (nl, _) = integrate_nonlinear_sme(&spec, &rho0, &cfg).unwrap();
    let p = purity(&nl.rho);
    assert!((p - 1.0).abs() < 1e-5, "{p}");
    // plain Euler-Maruyama only keeps purity to O(dt) per unit time
    let (em, _) = integrate_nonlinear_sme(&spec, &rho0, &IntegratorConfig { scheme: OracleScheme::EulerMaruyama, ..cfg }).unwrap();
    assert!((purity(&em.rho) - 1.0).abs() < 0.05);
}

#[test]
fn truncation_overflow_is_reported() {
    let spec = builtin_homodyne_thermal(1.0, 3.0, 0.5).unwrap();
    let rho0 = FockDensityMatrix::vacuum(1, 6);
    let err = integrate_me(&spec, &rho0, &IntegratorConfig::new(1e-2, 5.0, 6)).unwrap_err();
    assert_eq!(err.kind(), "TruncationOverflow");
}

#[test]
fn unstable_step_is_reported() {
    let spec = builtin_homodyne_thermal(1.0, 2.0, 0.5).unwrap();
    let rho0 = FockDensityMatrix::vacuum(1, 40);
    let err = integrate_me(&spec, &rho0, &IntegratorConfig { tail_tol: 1.0, ..IntegratorConfig::new(0.1, 20.0, 40) }).unwrap_err();
    assert_eq!(err.kind(), "ParameterOutOfRange");
}
