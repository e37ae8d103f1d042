//! Gaussian effect operator of the compiled measurement and its Q-function.

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_rep::PovmBlocks;
use crate::linalg::{expm, CMat, CVec, RMat, RVec};
use crate::trajectory::{MeasurementRecord, TrajectoryIntegrals};

const RANK_TOL: f64 = 1e-12;

/// `W_d` summarized by its Q-function `exp(log_norm + 2 α·d - αᵀ T α)` over `α = (Re α, Im α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianEffect {
    pub n_modes: usize,
    pub lpp: CMat,
    pub lpp_breve: CMat,
    pub d: CVec,
    pub alpha_mean: CVec,
    pub log_norm: f64,
    /// Real 2N x 2N information matrix `T` acting on (Re α, Im α).
    pub t_map: RMat,
    pub rank: usize,
    pub is_flat: bool,
}

fn split_re_im(v: &CVec) -> RVec {
    let n = v.len();
    RVec::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

fn join_re_im(v: &RVec) -> CVec {
    let n = v.len() / 2;
    CVec::from_fn(n, |i, _| C64::new(v[i], v[n + i]))
}

/// Information matrix from `𝐋''` and `𝐋̆''`; the α-quadratic form uses `H = 𝐋̆''ᵀ`.
pub fn information_matrix(lpp: &CMat, lpp_breve: &CMat) -> RMat {
    let n = lpp.nrows();
    let h = lpp_breve.transpose();
    let mut t = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let (hr, hi) = (h[(i, j)].re, h[(i, j)].im);
            let (lr, li) = (lpp[(i, j)].re, lpp[(i, j)].im);
            t[(i, j)] = -2.0 * hr - 2.0 * lr;
            t[(n + i, n + j)] = -2.0 * hr + 2.0 * lr;
            t[(i, n + j)] = 2.0 * hi + 2.0 * li;
            t[(n + j, i)] = 2.0 * hi + 2.0 * li;
        }
    }
    (&t + t.transpose()) * 0.5
}

struct Spectral {
    pinv: RMat,
    log_pdet: f64,
    rank: usize,
    null: Vec<RVec>,
}

fn spectral(t: &RMat) -> Result<Spectral> {
    let n = t.nrows();
    let eig = SymmetricEigen::new(t.clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut pinv = RMat::zeros(n, n);
    let (mut log_pdet, mut rank, mut null) = (0.0, 0, Vec::new());
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(i).into_owned();
        if ev < -1e-9 * scale {
            return Err(Error::SingularInformationMatrix);
        }
        if ev > RANK_TOL * scale {
            pinv += &u * u.transpose() / ev;
            log_pdet += ev.ln();
            rank += 1;
        } else {
            null.push(u);
        }
    }
    Ok(Spectral { pinv, log_pdet, rank, null })
}

impl GaussianEffect {
    /// `d` as a real 2N vector (Re d, Im d).
    pub fn d_vec(&self) -> RVec {
        split_re_im(&self.d)
    }

    pub fn t_pinv(&self) -> RMat {
        spectral(&self.t_map).map(|s| s.pinv).unwrap_or_else(|_| RMat::zeros(2 * self.n_modes, 2 * self.n_modes))
    }

    /// Directions in (Re α, Im α) that the record carries no information about.
    pub fn uninformative(&self) -> Vec<RVec> {
        spectral(&self.t_map).map(|s| s.null).unwrap_or_default()
    }

    pub fn log_q_density(&self, alpha: &CVec) -> f64 {
        let a = split_re_im(alpha);
        self.log_norm + 2.0 * a.dot(&self.d_vec()) - (a.transpose() * &self.t_map * &a)[(0, 0)]
    }

    pub fn export(&self) -> EffectExport {
        let m = |x: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..x.nrows()).map(|i| (0..x.ncols()).map(|j| [x[(i, j)].re, x[(i, j)].im]).collect()).collect()
        };
        let v = |x: &CVec| -> Vec<[f64; 2]> { x.iter().map(|z| [z.re, z.im]).collect() };
        EffectExport {
            lpp: m(&self.lpp),
            lpp_breve: m(&self.lpp_breve),
            d: v(&self.d),
            alpha_mean: v(&self.alpha_mean),
            log_norm: self.log_norm,
            is_flat: self.is_flat,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectExport {
    pub lpp: Vec<Vec<[f64; 2]>>,
    pub lpp_breve: Vec<Vec<[f64; 2]>>,
    pub d: Vec<[f64; 2]>,
    pub alpha_mean: Vec<[f64; 2]>,
    pub log_norm: f64,
    pub is_flat: bool,
}

pub fn effect_from_blocks(povm: &PovmBlocks, d: &CVec) -> Result<GaussianEffect> {
    effect_from_params(&povm.lpp(), &povm.lpp_breve(), d)
}

pub fn effect_from_params(lpp: &CMat, lpp_breve: &CMat, d: &CVec) -> Result<GaussianEffect> {
    let n = lpp.nrows();
    if lpp.ncols() != n || lpp_breve.shape() != (n, n) || d.len() != n {
        return Err(Error::DimensionMismatch("effect parameters must be N x N, N x N and N".into()));
    }
    let t = information_matrix(lpp, lpp_breve);
    let sp = spectral(&t)?;
    let dv = split_re_im(d);
    // d must lie in the informative subspace, otherwise no α explains it
    let dn = dv.norm();
    for u in &sp.null {
        if u.dot(&dv).abs() > 1e-9 * dn.max(1.0) {
            return Err(Error::SingularInformationMatrix);
        }
    }
    let mean = &sp.pinv * &dv;
    let log_norm = -(sp.rank as f64) * 0.5 * std::f64::consts::PI.ln() - 0.5 * sp.log_pdet - dv.dot(&mean);
    Ok(GaussianEffect {
        n_modes: n,
        lpp: lpp.clone(),
        lpp_breve: lpp_breve.clone(),
        d: d.clone(),
        alpha_mean: join_re_im(&mean),
        log_norm,
        t_map: t,
        rank: sp.rank,
        is_flat: sp.rank == 0,
    })
}

/// `<α|W_d|α>`, i.e. the density of `d` given a coherent initial state.
pub fn q_density(effect: &GaussianEffect, alpha: &CVec) -> f64 {
    effect.log_q_density(alpha).exp()
}

/// Single-mode `W_d` on a `dim`-level truncation, built from its normally ordered factors.
pub fn effect_operator_fock(effect: &GaussianEffect, dim: usize) -> Result<CMat> {
    if effect.n_modes != 1 {
        return Err(Error::DimensionMismatch("Fock effect operator is built for a single mode".into()));
    }
    let a = CMat::from_fn(dim, dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
    let ad = a.adjoint();
    let (l, lb, d) = (effect.lpp[(0, 0)], effect.lpp_breve[(0, 0)], effect.d[0]);
    let left = expm(&(&ad * d + &ad * &ad * l.conj()))?;
    let right = expm(&(&a * &a * l + &a * d.conj()))?;
    // :exp(x a^dag a): is diagonal with entries (1 + x)^k
    let x = lb * 2.0 + 1.0;
    let mid = CMat::from_fn(dim, dim, |i, j| if i == j { x.powu(i as u32) } else { C64::new(0.0, 0.0) });
    Ok(left * mid * right * C64::new(effect.log_norm.exp(), 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prior {
    Flat,
    /// Gaussian over (Re α, Im α).
    Gaussian { mean: CVec, cov: RMat },
}

/// Posterior over (Re α, Im α); `uninformative` directions have unbounded variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    pub mean: CVec,
    pub cov: RMat,
    pub uninformative: Vec<RVec>,
}

pub fn retrodict_posterior(effect: &GaussianEffect, prior: &Prior) -> Result<GaussianPosterior> {
    match prior {
        Prior::Flat => {
            let sp = spectral(&effect.t_map)?;
            Ok(GaussianPosterior { mean: effect.alpha_mean.clone(), cov: sp.pinv * 0.5, uninformative: sp.null })
        }
        Prior::Gaussian { mean, cov } => {
            let k = 2 * effect.n_modes;
            if mean.len() != effect.n_modes || cov.shape() != (k, k) {
                return Err(Error::DimensionMismatch("prior must be over N complex amplitudes".into()));
            }
            let p0 = cov.clone().try_inverse().ok_or(Error::SingularInformationMatrix)?;
            let prec = &effect.t_map * 2.0 + &p0;
            let post_cov = prec.try_inverse().ok_or(Error::SingularInformationMatrix)?;
            let m = &post_cov * (effect.d_vec() * 2.0 + &p0 * split_re_im(mean));
            Ok(GaussianPosterior { mean: join_re_im(&m), cov: (&post_cov + post_cov.transpose()) * 0.5, uninformative: vec![] })
        }
    }
}

/// `log Tr ρ̄(t)` for a coherent initial state, including the record weight `e^h`.
pub fn coherent_log_weight(integrals: &TrajectoryIntegrals, povm: &PovmBlocks, d: &CVec, alpha: &CVec) -> C64 {
    let n = povm.n_modes;
    let r = integrals.r_prime.rows(0, n).into_owned();
    let lpp = povm.lpp();
    let h = povm.lpp_breve().transpose();
    let rc = r.conjugate();
    let ac = alpha.conjugate();
    let konst = integrals.h + povm.delta_pp + r.dotc(&r) + rc.dot(&(lpp.conjugate() * &rc)) + rc.dot(&(&h * &r)) * 2.0 + r.dot(&(&lpp * &r));
    konst + ac.dot(d) + d.conjugate().dot(alpha) + ac.dot(&(lpp.conjugate() * &ac)) + alpha.dot(&(&lpp * alpha)) + ac.dot(&(&h * alpha)) * 2.0
}

/// `(𝐋'', 𝐋̆'', d)` for homodyne detection with a thermal bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneClosedForm {
    pub lpp: f64,
    pub lpp_breve: f64,
    pub d: f64,
}

pub fn homodyne_lpp(gamma: f64, k: f64, eta: f64, t: f64) -> f64 {
    let e = 1.0 - (-gamma * t).exp();
    -(e * eta) / (2.0 + 4.0 * k * (1.0 - eta * e))
}

pub fn homodyne_closed_form(gamma: f64, k: f64, eta: f64, record: &MeasurementRecord) -> HomodyneClosedForm {
    let t = record.t_final();
    let e = 1.0 - (-gamma * t).exp();
    let pref = (gamma * eta * (1.0 + 2.0 * k)).sqrt() / (1.0 + 2.0 * k * (1.0 - eta * e));
    let integral: f64 = (0..record.steps()).map(|j| (-gamma * j as f64 * record.dt / 2.0).exp() * record.y[(j, 0)] * record.dt).sum();
    let l = homodyne_lpp(gamma, k, eta, t);
    HomodyneClosedForm { lpp: l, lpp_breve: l, d: pref * integral }
}

/// Squeezed optomechanical readout: effect parameters and retrodictive variances.
/// `𝐋̆''` is reported in the pipeline's sign convention, which makes `σ_x² = -1/(2(𝐋''+𝐋̆''))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptomechClosedForm {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub lpp: f64,
    pub lpp_breve: f64,
    pub sigma_x2: f64,
    pub sigma_p2: f64,
}

fn coth(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// `t = None` takes the long-measurement limit.
pub fn optomech_closed_form(mu_p: f64, gamma: f64, k: f64, chi: f64, t: Option<f64>) -> Result<OptomechClosedForm> {
    if !(mu_p > 0.0 && gamma >= 0.0 && k >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("need mu' > 0, gamma >= 0, K >= 0 (got {mu_p}, {gamma}, {k})")));
    }
    let base = 8.0 * mu_p * gamma * (1.0 + 2.0 * k) + 16.0 * mu_p * mu_p;
    let gp = ((gamma + chi).powi(2) + base).sqrt();
    let gm = ((gamma - chi).powi(2) + base).sqrt();
    let tt = t.unwrap_or(f64::INFINITY);
    let ap = gamma + 4.0 * mu_p + chi + gp * coth(gp * tt / 2.0);
    let am = gamma + 4.0 * mu_p - chi + gm * coth(gm * tt / 2.0);
    Ok(OptomechClosedForm {
        gamma_plus: gp,
        gamma_minus: gm,
        lpp: 2.0 * mu_p * (1.0 / am - 1.0 / ap),
        lpp_breve: -2.0 * mu_p * (1.0 / am + 1.0 / ap),
        sigma_x2: ap / (8.0 * mu_p),
        sigma_p2: am / (8.0 * mu_p),
    })
}

/// Long-time `d` for the optomechanical readout (x and p currents are components 0 and 1),
/// in the pipeline convention: the integrals carry the `1/√2` of the complex current and the
/// p term enters with the sign matching `𝐋̆''` above.
pub fn optomech_d(mu_p: f64, gamma: f64, k: f64, chi: f64, record: &MeasurementRecord) -> Result<C64> {
    let cf = optomech_closed_form(mu_p, gamma, k, chi, None)?;
    let (gp, gm) = (cf.gamma_plus, cf.gamma_minus);
    let ix: f64 = (0..record.steps()).map(|j| (-gp * j as f64 * record.dt / 2.0).exp() * record.y[(j, 0)] * record.dt).sum();
    let ip: f64 = (0..record.steps()).map(|j| (-gm * j as f64 * record.dt / 2.0).exp() * record.y[(j, 1)] * record.dt).sum();
    let cx = mu_p.sqrt() * (gamma - gp + 4.0 * mu_p - chi + 4.0 * gamma * k) / (2.0 * gamma * k - chi);
    let cp = mu_p.sqrt() * (gamma - gm + 4.0 * mu_p + chi + 4.0 * gamma * k) / (2.0 * gamma * k + chi);
    Ok(C64::new(cx * ix, cp * ip) / 2f64.sqrt())
}
