//! Real-quadrature Kalman picture: forward filter and the backward (adjoint) effect equations.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigma, CVec, RMat, RVec};
use crate::povm::GaussianEffect;
use crate::system_model::SystemSpec;
use crate::trajectory::MeasurementRecord;

/// Drift `A`, measurement `B`, cross term `S` and diffusion `E` in quadrature coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KalmanMatrices {
    pub a: RMat,
    pub b: RMat,
    pub s: RMat,
    pub e: RMat,
}

impl KalmanMatrices {
    pub fn n_quad(&self) -> usize {
        self.a.nrows()
    }

    /// `F = A + 2 Sᵀ B`.
    pub fn f(&self) -> RMat {
        &self.a + self.s.transpose() * &self.b * 2.0
    }

    /// `E - Sᵀ S`.
    pub fn e_net(&self) -> RMat {
        &self.e - self.s.transpose() * &self.s
    }
}

pub fn kalman_matrices(spec: &SystemSpec) -> KalmanMatrices {
    let sg = sigma(spec.n_modes);
    let cc = spec.c.adjoint() * &spec.c;
    let mc = spec.m.adjoint() * &spec.c;
    KalmanMatrices {
        a: &sg * (&spec.g + cc.map(|z| z.im)),
        b: mc.map(|z| z.re),
        s: mc.map(|z| z.im) * sg.transpose(),
        e: &sg * cc.map(|z| z.re) * sg.transpose(),
    }
}

/// Mean and covariance of quadratures (q1, p1, q2, p2, ..), vacuum covariance `I/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mean: RVec,
    pub cov: RMat,
}

impl GaussianMoments {
    pub fn vacuum(n_modes: usize) -> Self {
        GaussianMoments { mean: RVec::zeros(2 * n_modes), cov: RMat::identity(2 * n_modes, 2 * n_modes) * 0.5 }
    }

    pub fn coherent(alpha: &CVec) -> Self {
        let n = alpha.len();
        let s = 2f64.sqrt();
        let mean = RVec::from_fn(2 * n, |i, _| if i % 2 == 0 { s * alpha[i / 2].re } else { s * alpha[i / 2].im });
        GaussianMoments { mean, cov: RMat::identity(2 * n, 2 * n) * 0.5 }
    }
}

fn riccati_forward(m: &KalmanMatrices, v: &RMat) -> RMat {
    let k = v * m.b.transpose() * 2.0 - m.s.transpose();
    &m.a * v + v * m.a.transpose() + &m.e - &k * k.transpose()
}

fn rk4<F: Fn(&RMat) -> RMat>(f: F, x: &RMat, h: f64) -> RMat {
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// One Itô step of the conditional moments given the sample `y` on `[t, t+dt)`.
pub fn forward_step(m: &KalmanMatrices, st: &GaussianMoments, y: &[f64], dt: f64) -> Result<GaussianMoments> {
    let k = &st.cov * m.b.transpose() * 2.0 - m.s.transpose();
    let yv = RVec::from_column_slice(y);
    let innov = yv * dt - &m.b * &st.mean * (2.0 * dt);
    let mean = &st.mean + &m.a * &st.mean * dt + k * innov;
    let cov = symmetrize(&rk4(|v| riccati_forward(m, v), &st.cov, dt));
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::RiccatiBlowup("forward filter produced non-finite moments".into()));
    }
    let min_ev = SymmetricEigen::new(cov.clone()).eigenvalues.min();
    if min_ev < -1e-8 * cov.amax().max(1.0) {
        return Err(Error::FilterDivergence(format!("covariance lost positivity (min eigenvalue {min_ev:e})")));
    }
    Ok(GaussianMoments { mean, cov })
}

/// Conditional moments at every grid point, starting with `initial`.
pub fn forward_filter(m: &KalmanMatrices, initial: &GaussianMoments, record: &MeasurementRecord) -> Result<Vec<GaussianMoments>> {
    let mut out = Vec::with_capacity(record.steps() + 1);
    out.push(initial.clone());
    for j in 0..record.steps() {
        let next = forward_step(m, &out[j], &record.sample(j), record.dt)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BackwardScheme {
    /// Homogeneous flow by RK4 substeps, record entering as impulses `y_j dt` at `τ_j`.
    Rk4Impulse { substeps: usize },
    /// Plain Euler in backward time; first order, kept for comparison.
    Euler,
}

impl Default for BackwardScheme {
    fn default() -> Self {
        BackwardScheme::Rk4Impulse { substeps: 4 }
    }
}

/// Effect in information form: `Λ` and `z`, with the moments `x`, `V` where defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectMoments {
    pub tau: f64,
    pub lambda: RMat,
    pub z: RVec,
    /// `V = Λ⁺`, restricted to informative directions.
    pub v: RMat,
    pub x: RVec,
    /// Orthonormal directions with no information (infinite variance).
    pub uninformative: Vec<RVec>,
}

impl EffectMoments {
    pub fn from_information(tau: f64, lambda: RMat, z: RVec) -> Self {
        let n = lambda.nrows();
        let eig = SymmetricEigen::new(symmetrize(&lambda));
        let scale = eig.eigenvalues.amax().max(1e-300);
        let mut v = RMat::zeros(n, n);
        let mut uninformative = Vec::new();
        for (i, &ev) in eig.eigenvalues.iter().enumerate() {
            let u = eig.eigenvectors.column(i).into_owned();
            if ev > 1e-12 * scale && ev > 1e-300 {
                v += &u * u.transpose() / ev;
            } else {
                uninformative.push(u);
            }
        }
        let x = &v * &z;
        EffectMoments { tau, lambda, z, v, x, uninformative }
    }

    /// Diagonal variances, infinite along axes touched by an uninformative direction.
    pub fn variances(&self) -> Vec<f64> {
        (0..self.v.nrows())
            .map(|i| {
                if self.uninformative.iter().any(|u| u[i].abs() > 1e-9) {
                    f64::INFINITY
                } else {
                    self.v[(i, i)]
                }
            })
            .collect()
    }
}

fn lambda_rhs(f: &RMat, en: &RMat, bb4: &RMat, l: &RMat) -> RMat {
    l * f + f.transpose() * l - l * en * l + bb4
}

/// Integrate the adjoint equations from `τ = t_m` back to `τ = 0`.
/// With `keep_path`, the moments at every grid point are returned (ordered by decreasing τ).
pub fn integrate_backward(
    m: &KalmanMatrices,
    record: &MeasurementRecord,
    scheme: BackwardScheme,
    keep_path: bool,
) -> Result<(EffectMoments, Vec<EffectMoments>)> {
    let n = m.n_quad();
    let f = m.f();
    let en = m.e_net();
    let bb4 = m.b.transpose() * &m.b * 4.0;
    let dt = record.dt;
    let steps = record.steps();
    let mut lam = RMat::zeros(n, n);
    let mut z = RVec::zeros(n);
    let mut path = Vec::new();
    if keep_path {
        path.push(EffectMoments::from_information(record.t_final(), lam.clone(), z.clone()));
    }
    // state packed as an n x (n+1) matrix [Λ | z] for the RK4 helper
    let pack = |l: &RMat, z: &RVec| {
        let mut s = RMat::zeros(n, n + 1);
        s.view_mut((0, 0), (n, n)).copy_from(l);
        s.column_mut(n).copy_from(z);
        s
    };
    let hom = |s: &RMat| {
        let l = s.view((0, 0), (n, n)).into_owned();
        let zz = s.column(n).into_owned();
        let dl = lambda_rhs(&f, &en, &bb4, &l);
        let dz = (&f - &en * &l).transpose() * zz;
        pack(&dl, &dz)
    };
    let drive = |l: &RMat, y: &[f64]| (m.b.transpose() * 2.0 + l * m.s.transpose()) * RVec::from_column_slice(y);
    for k in 0..steps {
        let j = steps - 1 - k;
        let y = record.sample(j);
        match scheme {
            BackwardScheme::Rk4Impulse { substeps } => {
                let h = dt / substeps.max(1) as f64;
                let mut s = pack(&lam, &z);
                for _ in 0..substeps.max(1) {
                    s = rk4(hom, &s, h);
                }
                lam = symmetrize(&s.view((0, 0), (n, n)).into_owned());
                z = s.column(n).into_owned();
                z += drive(&lam, &y) * dt;
            }
            BackwardScheme::Euler => {
                let dl = lambda_rhs(&f, &en, &bb4, &lam);
                let dz = (&f - &en * &lam).transpose() * &z + drive(&lam, &y);
                lam = symmetrize(&(&lam + dl * dt));
                z += dz * dt;
            }
        }
        if lam.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::RiccatiBlowup(format!("adjoint Riccati diverged at tau={}", j as f64 * dt)));
        }
        if keep_path {
            path.push(EffectMoments::from_information(j as f64 * dt, lam.clone(), z.clone()));
        }
    }
    Ok((EffectMoments::from_information(0.0, lam, z), path))
}

/// Quadrature-space Wigner moments of the effect: mean `√2 <α>` and covariance `T⁺ - I/2`
/// on the informative subspace (interleaved q, p order).
pub fn effect_in_quadratures(effect: &GaussianEffect) -> (RVec, RMat) {
    let n = effect.d.len();
    let perm = |i: usize| if i % 2 == 0 { i / 2 } else { n + i / 2 };
    let tp = effect.t_pinv();
    let proj = &tp * &effect.t_map;
    let x = RVec::from_fn(2 * n, |i, _| {
        let a = effect.alpha_mean[i / 2];
        2f64.sqrt() * if i % 2 == 0 { a.re } else { a.im }
    });
    let v = RMat::from_fn(2 * n, 2 * n, |i, j| tp[(perm(i), perm(j))] - 0.5 * proj[(perm(i), perm(j))]);
    (x, v)
}

/// Largest relative discrepancy between adjoint and POVM effect moments.
pub fn crosscheck_against_povm(adj: &EffectMoments, effect: &GaussianEffect, tol: f64) -> Result<f64> {
    let (x, v) = effect_in_quadratures(effect);
    let dx = (&adj.x - &x).amax() / x.amax().max(1.0);
    let dv = (&adj.v - &v).amax() / v.amax().max(1.0);
    let err = dx.max(dv);
    if !(err <= tol) {
        return Err(Error::CrossCheckFailure(format!("adjoint and POVM effects differ by {err:e} (tol {tol:e})")));
    }
    Ok(err)
}
