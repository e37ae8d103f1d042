//! Measurement records and the stochastic integrals {l', r', h, d} that summarize them.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint_kalman::{forward_step, kalman_matrices, GaussianMoments};
use crate::error::{Error, Result};
use crate::lie_rep::{povm_blocks, propagator_blocks, rep_of_generator, PovmBlocks, PropagatorBlocks};
use crate::linalg::{j_mat, CMat, CVec, RMat};
use crate::parameterization::{NoiseCouplings, QuadraticGenerator};
use crate::system_model::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatisticsMode {
    Ostensible,
    Conditioned,
}

/// Current samples `y[j]` on the left-endpoint grid `τ_j = j dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub dt: f64,
    pub y: RMat,
    pub seed: u64,
    pub mode: StatisticsMode,
}

impl MeasurementRecord {
    pub fn steps(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.y.ncols()
    }

    pub fn t_final(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn sample(&self, j: usize) -> Vec<f64> {
        self.y.row(j).iter().copied().collect()
    }

    /// Merge groups of `factor` consecutive samples, keeping `∫ y dt` over each group.
    pub fn coarsen(&self, factor: usize) -> MeasurementRecord {
        let steps = self.steps() / factor;
        let y = RMat::from_fn(steps, self.n_components(), |j, k| {
            (0..factor).map(|i| self.y[(j * factor + i, k)]).sum::<f64>() / factor as f64
        });
        MeasurementRecord { dt: self.dt * factor as f64, y, seed: self.seed, mode: self.mode }
    }

    pub fn validate(&self, monitored: &[bool]) -> Result<()> {
        if monitored.len() != self.n_components() {
            return Err(Error::DimensionMismatch(format!(
                "record has {} components, model expects {}",
                self.n_components(),
                monitored.len()
            )));
        }
        if !(self.dt > 0.0) || self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("record must have dt > 0 and finite samples".into()));
        }
        Ok(())
    }
}

/// Independent stream for trajectory `index` of an ensemble seeded by `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn steps_for(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && t_final >= 0.0 && dt.is_finite() && t_final.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("need dt > 0 and T >= 0, got dt={dt} T={t_final}")));
    }
    let j = (t_final / dt).round();
    if (j * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(Error::ParameterOutOfRange(format!("T={t_final} is not a multiple of dt={dt}")));
    }
    Ok(j as usize)
}

/// White-noise record: each monitored `y dt` is Normal(0, dt).
pub fn sample_ostensible_record(spec: &SystemSpec, dt: f64, t_final: f64, seed: u64) -> Result<MeasurementRecord> {
    ostensible_from_rng(&spec.monitored(), dt, steps_for(dt, t_final)?, seed, &mut trajectory_rng(seed, 0))
}

pub fn ostensible_from_rng(
    monitored: &[bool],
    dt: f64,
    steps: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<MeasurementRecord> {
    let s = 1.0 / dt.sqrt();
    let mut y = RMat::zeros(steps, monitored.len());
    for j in 0..steps {
        for (k, &on) in monitored.iter().enumerate() {
            if on {
                let g: f64 = rng.sample(StandardNormal);
                y[(j, k)] = g * s;
            }
        }
    }
    Ok(MeasurementRecord { dt, y, seed, mode: StatisticsMode::Ostensible })
}

/// Record drawn from its true law for a Gaussian initial state, driven by the forward filter.
pub fn sample_conditioned_record_gaussian(
    spec: &SystemSpec,
    initial: &GaussianMoments,
    dt: f64,
    t_final: f64,
    seed: u64,
) -> Result<MeasurementRecord> {
    ConditionedSampler::new(spec, initial, dt, steps_for(dt, t_final)?)?.sample(seed, 0)
}

/// Conditioned-record generator with the deterministic covariance path precomputed once.
#[derive(Debug, Clone)]
pub struct ConditionedSampler {
    monitored: Vec<bool>,
    a: RMat,
    b2: RMat,
    gains: Vec<RMat>,
    mean0: crate::linalg::RVec,
    dt: f64,
}

impl ConditionedSampler {
    pub fn new(spec: &SystemSpec, initial: &GaussianMoments, dt: f64, steps: usize) -> Result<Self> {
        let mats = kalman_matrices(spec);
        let mut gains = Vec::with_capacity(steps);
        let mut state = initial.clone();
        let zero = vec![0.0; 2 * spec.n_channels];
        for _ in 0..steps {
            gains.push(&state.cov * mats.b.transpose() * 2.0 - mats.s.transpose());
            state = forward_step(&mats, &state, &zero, dt)?;
        }
        Ok(ConditionedSampler { monitored: spec.monitored(), b2: &mats.b * 2.0, a: mats.a, gains, mean0: initial.mean.clone(), dt })
    }

    pub fn steps(&self) -> usize {
        self.gains.len()
    }

    pub fn sample(&self, seed: u64, index: u64) -> Result<MeasurementRecord> {
        let mut rng = trajectory_rng(seed, index);
        let dt = self.dt;
        let sq = dt.sqrt();
        let mut x = self.mean0.clone();
        let mut y = RMat::zeros(self.steps(), self.monitored.len());
        let mut innov = crate::linalg::RVec::zeros(self.monitored.len());
        for j in 0..self.steps() {
            let mean = &self.b2 * &x;
            for (k, &on) in self.monitored.iter().enumerate() {
                innov[k] = 0.0;
                if on {
                    let g: f64 = rng.sample(StandardNormal);
                    innov[k] = g * sq;
                    y[(j, k)] = mean[k] + g / sq;
                }
            }
            x += &self.a * &x * dt + &self.gains[j] * &innov;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::FilterDivergence("conditioned mean became non-finite".into()));
        }
        Ok(MeasurementRecord { dt, y, seed, mode: StatisticsMode::Conditioned })
    }
}

/// Summary of a record: `ρ̄(t) = e^h e^{Qt} e^{b^dag r'} e^{l' b} ρ(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIntegrals {
    pub l_prime: CVec,
    pub r_prime: CVec,
    pub h: C64,
    pub t: f64,
}

impl TrajectoryIntegrals {
    pub fn zero(n_modes: usize) -> Self {
        TrajectoryIntegrals { l_prime: CVec::zeros(2 * n_modes), r_prime: CVec::zeros(2 * n_modes), h: C64::new(0.0, 0.0), t: 0.0 }
    }

    /// Largest mismatch between the tilde half and the conjugate of the physical half.
    pub fn pairing_residual(&self) -> f64 {
        let n = self.l_prime.len() / 2;
        (0..n)
            .map(|i| {
                (self.l_prime[n + i] - self.l_prime[i].conj())
                    .norm()
                    .max((self.r_prime[n + i] - self.r_prime[i].conj()).norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Per-step kernels mapping `y_j dt` to `(dl', dr')`, shared across an ensemble.
#[derive(Debug, Clone)]
pub struct BlockTable {
    pub n_modes: usize,
    pub dt: f64,
    pub steps: usize,
    k_l: Vec<CMat>,
    k_r: Vec<CMat>,
    pub final_blocks: PropagatorBlocks,
}

fn kernels(b: &PropagatorBlocks, w: &NoiseCouplings) -> (CMat, CMat) {
    let j = j_mat(2 * b.n_modes);
    let kl = &w.w_l * &b.n11 + &w.w_r * &j * &b.nm11;
    let kr = &w.w_l * &b.n1m1 * &j + &w.w_r * &j * &b.nm1m1 * &j;
    (kl, kr)
}

impl BlockTable {
    pub fn new(gen: &QuadraticGenerator, couplings: &NoiseCouplings, dt: f64, steps: usize) -> Result<Self> {
        let rep = rep_of_generator(gen);
        let ks: Vec<(CMat, CMat)> = (0..steps)
            .into_par_iter()
            .map(|j| propagator_blocks(&rep, j as f64 * dt).map(|b| kernels(&b, couplings)))
            .collect::<Result<_>>()?;
        let (k_l, k_r) = ks.into_iter().unzip();
        let final_blocks = propagator_blocks(&rep, steps as f64 * dt)?;
        Ok(BlockTable { n_modes: gen.n_modes, dt, steps, k_l, k_r, final_blocks })
    }

    pub fn povm(&self) -> Result<PovmBlocks> {
        povm_blocks(&self.final_blocks)
    }
}

fn accumulate_step(acc: &mut TrajectoryIntegrals, dlp: CVec, drp: CVec) {
    acc.h += dlp.dot(&acc.r_prime) + dlp.dot(&drp) * 0.5;
    acc.l_prime += dlp;
    acc.r_prime += drp;
}

fn ydt(record: &MeasurementRecord, j: usize) -> CVec {
    CVec::from_iterator(record.n_components(), record.y.row(j).iter().map(|v| C64::new(v * record.dt, 0.0)))
}

/// Itô sums over the record using the precomputed kernels.
pub fn accumulate_integrals(table: &BlockTable, record: &MeasurementRecord) -> Result<TrajectoryIntegrals> {
    if record.steps() != table.steps || (record.dt - table.dt).abs() > 1e-15 * table.dt {
        return Err(Error::DimensionMismatch(format!(
            "record grid ({} steps, dt={}) does not match block table ({} steps, dt={})",
            record.steps(),
            record.dt,
            table.steps,
            table.dt
        )));
    }
    let mut acc = TrajectoryIntegrals::zero(table.n_modes);
    for j in 0..record.steps() {
        let v = ydt(record, j);
        accumulate_step(&mut acc, table.k_l[j].transpose() * &v, table.k_r[j].transpose() * &v);
    }
    acc.t = record.t_final();
    Ok(acc)
}

/// Same sums with blocks supplied by an arbitrary evaluator.
pub fn accumulate_integrals_with<F>(blocks_at: F, couplings: &NoiseCouplings, record: &MeasurementRecord) -> Result<TrajectoryIntegrals>
where
    F: Fn(f64) -> Result<PropagatorBlocks>,
{
    let n_modes = couplings.w_l.ncols() / 2;
    let mut acc = TrajectoryIntegrals::zero(n_modes);
    for j in 0..record.steps() {
        let b = blocks_at(j as f64 * record.dt)?;
        let (kl, kr) = kernels(&b, couplings);
        let v = ydt(record, j);
        accumulate_step(&mut acc, kl.transpose() * &v, kr.transpose() * &v);
    }
    acc.t = record.t_final();
    Ok(acc)
}

/// `d = l'^dag + 2 L''* r'* + (I + 2 L̆''ᵀ) r'` over the physical halves.
pub fn stochastic_d(integrals: &TrajectoryIntegrals, povm: &PovmBlocks) -> CVec {
    let n = povm.n_modes;
    let l = integrals.l_prime.rows(0, n).into_owned();
    let r = integrals.r_prime.rows(0, n).into_owned();
    let lpp = povm.lpp();
    let lb = povm.lpp_breve();
    let id = CMat::identity(n, n);
    l.conjugate() + lpp.conjugate() * r.conjugate() * C64::new(2.0, 0.0) + (id + lb.transpose() * C64::new(2.0, 0.0)) * r
}

/// JSON-friendly view of the integrals and `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralsExport {
    pub l_prime_re: Vec<f64>,
    pub l_prime_im: Vec<f64>,
    pub r_prime_re: Vec<f64>,
    pub r_prime_im: Vec<f64>,
    pub h_re: f64,
    pub h_im: f64,
    pub d_re: Vec<f64>,
    pub d_im: Vec<f64>,
}

impl IntegralsExport {
    pub fn new(i: &TrajectoryIntegrals, d: &CVec) -> Self {
        let re = |v: &CVec| v.iter().map(|z| z.re).collect();
        let im = |v: &CVec| v.iter().map(|z| z.im).collect();
        IntegralsExport {
            l_prime_re: re(&i.l_prime),
            l_prime_im: im(&i.l_prime),
            r_prime_re: re(&i.r_prime),
            r_prime_im: im(&i.r_prime),
            h_re: i.h.re,
            h_im: i.h.im,
            d_re: re(d),
            d_im: im(d),
        }
    }
}
