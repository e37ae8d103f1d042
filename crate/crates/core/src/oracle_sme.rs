//! Brute-force truncated-Fock integrators used as independent references.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, Csr, I};
use crate::state_engine::{mode_annihilators, FockDensityMatrix, DEFAULT_TAIL_TOL};
use crate::system_model::SystemSpec;
use crate::trajectory::{steps_for, trajectory_rng, MeasurementRecord, StatisticsMode};
use crate::{RMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OracleScheme {
    #[default]
    EulerMaruyama,
    /// Milstein step written in Kraus form, `ρ -> MρM^dag + dt(Σ cρc^dag - Σ vρv^dag)`.
    /// Strong order one for commuting measured channels; exactly purity preserving when
    /// every Lindblad is fully monitored.
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    pub fock_dim: usize,
    pub tail_tol: f64,
    pub seed: u64,
    pub scheme: OracleScheme,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_final: f64, fock_dim: usize) -> Self {
        IntegratorConfig { dt, t_final, fock_dim, tail_tol: DEFAULT_TAIL_TOL, seed: 0, scheme: OracleScheme::EulerMaruyama }
    }

    pub fn validate(&self) -> Result<usize> {
        if self.fock_dim < 4 {
            return Err(Error::ParameterOutOfRange(format!("fock_dim = {} must be >= 4", self.fock_dim)));
        }
        steps_for(self.dt, self.t_final)
    }
}

/// Hamiltonian, Lindblads and measured combinations `v = M^dag c` on the truncation.
#[derive(Debug, Clone)]
pub struct FockModel {
    pub n_modes: usize,
    pub dim: usize,
    pub h: CMat,
    pub c: Vec<CMat>,
    pub v: Vec<CMat>,
    /// `-iH - ½ Σ c^dag c`.
    pub h_eff: CMat,
    sparse: SparseOps,
}

/// Banded copies of the model operators; the steppers only ever multiply by them.
#[derive(Debug, Clone)]
struct SparseOps {
    h_eff: Csr,
    c: Vec<Csr>,
    v: Vec<Csr>,
}

impl FockModel {
    pub fn new(spec: &SystemSpec, dim: usize) -> Self {
        let n = spec.n_modes;
        let ann = mode_annihilators(n, dim);
        let s = 1.0 / 2f64.sqrt();
        let mut x = Vec::with_capacity(2 * n);
        for a in &ann {
            let ad = a.adjoint();
            x.push((a + &ad) * C64::new(s, 0.0));
            x.push((&ad - a) * (I * s));
        }
        let total = dim.pow(n as u32);
        let mut h = CMat::zeros(total, total);
        for i in 0..2 * n {
            for j in 0..2 * n {
                if spec.g[(i, j)] != 0.0 {
                    h += &x[i] * &x[j] * C64::new(0.5 * spec.g[(i, j)], 0.0);
                }
            }
        }
        let c: Vec<CMat> = (0..spec.n_channels)
            .map(|k| (0..2 * n).fold(CMat::zeros(total, total), |acc, m| acc + &x[m] * spec.c[(k, m)]))
            .collect();
        let v = (0..2 * spec.n_channels)
            .map(|j| (0..spec.n_channels).fold(CMat::zeros(total, total), |acc, k| acc + &c[k] * spec.m[(k, j)].conj()))
            .collect();
        let k = c.iter().fold(CMat::zeros(total, total), |acc, ck| acc + ck.adjoint() * ck);
        let h_eff = &h * (-I) - k * C64::new(0.5, 0.0);
        let v: Vec<CMat> = v;
        let sparse = SparseOps {
            h_eff: Csr::from_dense(&h_eff),
            c: c.iter().map(Csr::from_dense).collect(),
            v: v.iter().map(Csr::from_dense).collect(),
        };
        FockModel { n_modes: n, dim, h, c, v, h_eff, sparse }
    }

    /// Unconditioned Lindblad generator applied to a Hermitian `rho`.
    pub fn lindblad(&self, rho: &CMat) -> CMat {
        let hr = self.sparse.h_eff.mul_dense(rho);
        self.sparse.c.iter().fold(&hr + hr.adjoint(), |acc, ck| acc + sandwich(ck, rho))
    }

    /// `(h_eff dt + Σ_j y_j dt v_j) X`.
    fn drive(&self, x: &CMat, ydt: &[f64], dt: f64) -> CMat {
        let mut out = self.sparse.h_eff.mul_dense(x) * C64::new(dt, 0.0);
        for (j, &y) in ydt.iter().enumerate() {
            if y != 0.0 {
                out += self.sparse.v[j].mul_dense(x) * C64::new(y, 0.0);
            }
        }
        out
    }

    /// Euler step `ρ += Lρ dt + (Vρ + ρV^dag)`, with `V = Σ_j y_j dt v_j`.
    fn linear_step(&self, rho: &CMat, ydt: &[f64], dt: f64) -> CMat {
        let ar = self.drive(rho, ydt, dt);
        let mut out = rho + &ar + ar.adjoint();
        for ck in &self.sparse.c {
            out += sandwich(ck, rho) * C64::new(dt, 0.0);
        }
        (&out + out.adjoint()) * C64::new(0.5, 0.0)
    }

    /// `M X` with `M = I + h_eff dt + V + ½(V² - dt Σ v_j²)`.
    fn kraus_apply(&self, x: &CMat, ydt: &[f64], dt: f64) -> CMat {
        let mut out = x + self.drive(x, ydt, dt);
        let (mut vx, mut any) = (CMat::zeros(x.nrows(), x.ncols()), false);
        for (j, &y) in ydt.iter().enumerate() {
            if y != 0.0 {
                let v = &self.sparse.v[j];
                vx += v.mul_dense(x) * C64::new(y, 0.0);
                out -= v.mul_dense(&v.mul_dense(x)) * C64::new(0.5 * dt, 0.0);
                any = true;
            }
        }
        if any {
            for (j, &y) in ydt.iter().enumerate() {
                if y != 0.0 {
                    out += self.sparse.v[j].mul_dense(&vx) * C64::new(0.5 * y, 0.0);
                }
            }
        }
        out
    }

    fn kraus_step(&self, rho: &CMat, ydt: &[f64], dt: f64) -> CMat {
        let dtc = C64::new(dt, 0.0);
        let mr = self.kraus_apply(rho, ydt, dt);
        let mut out = self.kraus_apply(&mr.adjoint(), ydt, dt);
        for ck in &self.sparse.c {
            out += sandwich(ck, rho) * dtc;
        }
        for (j, &y) in ydt.iter().enumerate() {
            if y != 0.0 {
                out -= sandwich(&self.sparse.v[j], rho) * dtc;
            }
        }
        (&out + out.adjoint()) * C64::new(0.5, 0.0)
    }

    fn step(&self, rho: &CMat, ydt: &[f64], dt: f64, scheme: OracleScheme) -> CMat {
        match scheme {
            OracleScheme::EulerMaruyama => self.linear_step(rho, ydt, dt),
            OracleScheme::Milstein => self.kraus_step(rho, ydt, dt),
        }
    }

    /// `<M^dag c + Mᵀ c‡>` for a normalized state.
    fn mean_current(&self, rho: &CMat) -> Vec<f64> {
        self.v.iter().map(|v| 2.0 * (v * rho).trace().re).collect()
    }
}

/// `c ρ c^dag` for Hermitian `ρ`, as `c (c ρ)^dag`.
fn sandwich(c: &Csr, rho: &CMat) -> CMat {
    c.mul_dense(&c.mul_dense(rho).adjoint())
}

fn check_state(rho: &FockDensityMatrix, spec: &SystemSpec, dim: usize) -> Result<()> {
    if rho.n_modes != spec.n_modes || rho.dim_per_mode != dim {
        return Err(Error::DimensionMismatch("initial state does not match the model truncation".into()));
    }
    Ok(())
}

fn finite(rho: &CMat) -> Result<()> {
    if rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange("integration became unstable; reduce dt".into()))
    }
}

fn wrap(rho0: &FockDensityMatrix, rho: CMat, normalized: bool, tail_tol: f64) -> Result<FockDensityMatrix> {
    let out = FockDensityMatrix { rho, is_normalized: normalized, ..rho0.clone() };
    out.check_tail(tail_tol)?;
    Ok(out)
}

/// Linear SME driven by a given record; returns the unnormalized state at the final time.
pub fn integrate_linear_sme(spec: &SystemSpec, rho0: &FockDensityMatrix, record: &MeasurementRecord, tail_tol: f64) -> Result<FockDensityMatrix> {
    let model = FockModel::new(spec, rho0.dim_per_mode);
    integrate_linear_sme_with(&model, rho0, record, tail_tol, OracleScheme::EulerMaruyama)
}

pub fn integrate_linear_sme_with(
    model: &FockModel,
    rho0: &FockDensityMatrix,
    record: &MeasurementRecord,
    tail_tol: f64,
    scheme: OracleScheme,
) -> Result<FockDensityMatrix> {
    if record.n_components() != model.v.len() {
        return Err(Error::DimensionMismatch("record width does not match 2L".into()));
    }
    let mut rho = rho0.rho.clone();
    let mut ydt = vec![0.0; record.n_components()];
    for j in 0..record.steps() {
        for (k, y) in ydt.iter_mut().enumerate() {
            *y = record.y[(j, k)] * record.dt;
        }
        rho = model.step(&rho, &ydt, record.dt, scheme);
    }
    finite(&rho)?;
    wrap(rho0, rho, false, tail_tol)
}

/// Normalized (nonlinear) SME with internally generated noise; also returns the record.
pub fn integrate_nonlinear_sme(
    spec: &SystemSpec,
    rho0: &FockDensityMatrix,
    cfg: &IntegratorConfig,
) -> Result<(FockDensityMatrix, MeasurementRecord)> {
    let steps = cfg.validate()?;
    check_state(rho0, spec, cfg.fock_dim)?;
    let model = FockModel::new(spec, cfg.fock_dim);
    let monitored = spec.monitored();
    let mut rng = trajectory_rng(cfg.seed, 0);
    let mut rho = &rho0.rho / rho0.trace();
    let mut y = RMat::zeros(steps, monitored.len());
    let sq = cfg.dt.sqrt();
    for j in 0..steps {
        let mean = model.mean_current(&rho);
        let mut ydt = vec![0.0; monitored.len()];
        for (k, &on) in monitored.iter().enumerate() {
            if on {
                let g: f64 = rng.sample(StandardNormal);
                ydt[k] = mean[k] * cfg.dt + g * sq;
                y[(j, k)] = ydt[k] / cfg.dt;
            }
        }
        // the linear step with the true record, renormalized, is the Itô-Euler nonlinear step
        rho = model.step(&rho, &ydt, cfg.dt, cfg.scheme);
        let tr = rho.trace();
        if !(tr.re > 0.0) {
            return Err(Error::ZeroTrace);
        }
        rho /= tr;
    }
    let record = MeasurementRecord { dt: cfg.dt, y, seed: cfg.seed, mode: StatisticsMode::Conditioned };
    Ok((wrap(rho0, rho, true, cfg.tail_tol)?, record))
}

/// Unconditioned master equation by classical RK4 with step `cfg.dt`.
pub fn integrate_me(spec: &SystemSpec, rho0: &FockDensityMatrix, cfg: &IntegratorConfig) -> Result<FockDensityMatrix> {
    let steps = cfg.validate()?;
    check_state(rho0, spec, cfg.fock_dim)?;
    let model = FockModel::new(spec, cfg.fock_dim);
    let h = C64::new(cfg.dt, 0.0);
    let mut rho = rho0.rho.clone();
    for _ in 0..steps {
        let k1 = model.lindblad(&rho);
        let k2 = model.lindblad(&(&rho + &k1 * (h * 0.5)));
        let k3 = model.lindblad(&(&rho + &k2 * (h * 0.5)));
        let k4 = model.lindblad(&(&rho + &k3 * h));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (h / 6.0);
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    }
    finite(&rho)?;
    wrap(rho0, rho, rho0.is_normalized, cfg.tail_tol)
}
