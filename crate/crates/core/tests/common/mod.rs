#![allow(dead_code)]

use lintraj::lie_rep::AlgebraElement;
use lintraj::linalg::{max_abs, CMat, CVec, RMat};
use lintraj::parameterization::{compute_generator, QuadraticGenerator};
use lintraj::system_model::SystemSpec;
use lintraj::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn cnormal(r: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(r), normal(r))
}

pub fn random_cmat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cnormal(r))
}

/// Measurement setting with orthonormal rows scaled by random efficiencies.
pub fn random_m(r: &mut ChaCha8Rng, l: usize) -> CMat {
    let q = random_cmat(r, 2 * l, 2 * l).qr().q();
    let mut m = q.rows(0, l).into_owned();
    for k in 0..l {
        let eta: f64 = r.random_range(0.0..1.0);
        m.row_mut(k).scale_mut(eta.sqrt());
    }
    m
}

pub fn random_spec(r: &mut ChaCha8Rng, n: usize, l: usize, scale: f64) -> SystemSpec {
    let g = RMat::from_fn(2 * n, 2 * n, |_, _| normal(r) * scale);
    let g = &g + g.transpose();
    let c = random_cmat(r, l, 2 * n) * C64::new(scale, 0.0);
    SystemSpec::new(g, c, random_m(r, l)).unwrap()
}

pub fn spectral_radius(m: &CMat) -> f64 {
    lintraj::linalg::eigenvalues(m).unwrap().iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Physical generator with the inner representation block rescaled to a target spectral radius.
pub fn random_generator(r: &mut ChaCha8Rng, n: usize, radius: f64) -> QuadraticGenerator {
    let spec = random_spec(r, n, 2, 1.0);
    let g = compute_generator(&spec);
    let rho = spectral_radius(&lintraj::lie_rep::rep_of_generator(&g).matrix).max(1e-9);
    let s = C64::new(radius / rho, 0.0);
    QuadraticGenerator { n_modes: n, r: &g.r * s, d: &g.d * s, l: &g.l * s, scalar: g.scalar * s }
}

pub fn random_element(r: &mut ChaCha8Rng, n: usize) -> AlgebraElement {
    let a = random_cmat(r, 4 * n, 4 * n);
    let a = &a + a.transpose();
    let v = CVec::from_fn(4 * n, |_, _| cnormal(r));
    AlgebraElement { n_modes: n, a, v, c: cnormal(r) }
}

pub fn random_cvec(r: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cnormal(r))
}

/// Vector pairs `(v, v̄)` with the second half the conjugate of the first.
pub fn paired_vec(r: &mut ChaCha8Rng, n_modes: usize) -> CVec {
    let h = random_cvec(r, n_modes);
    CVec::from_fn(2 * n_modes, |i, _| if i < n_modes { h[i] } else { h[i - n_modes].conj() })
}

pub fn close(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub struct PipelineOut {
    pub integrals: lintraj::trajectory::TrajectoryIntegrals,
    pub povm: lintraj::lie_rep::PovmBlocks,
    pub effect: lintraj::povm::GaussianEffect,
}

/// Record -> integrals -> effect, via a freshly built block table.
pub fn run_pipeline(spec: &SystemSpec, record: &lintraj::trajectory::MeasurementRecord) -> PipelineOut {
    use lintraj::parameterization::compute_noise_couplings;
    use lintraj::trajectory::{accumulate_integrals, stochastic_d, BlockTable};
    let table = BlockTable::new(&compute_generator(spec), &compute_noise_couplings(spec), record.dt, record.steps()).unwrap();
    let integrals = accumulate_integrals(&table, record).unwrap();
    let povm = table.povm().unwrap();
    let d = stochastic_d(&integrals, &povm);
    let effect = lintraj::povm::effect_from_blocks(&povm, &d).unwrap();
    PipelineOut { integrals, povm, effect }
}
