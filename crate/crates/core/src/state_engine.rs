//! Applies the composed evolution superoperator to density matrices on a truncated Fock space.
//!
//! Vectorization stacks columns: `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`. A tilde annihilator acts as
//! right multiplication by `a^dag` and a tilde creator as right multiplication by `a`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_rep::{disentangle_quadratic, normal_order_linear, PropagatorBlocks};
use crate::linalg::{expm, expm_multiply, CMat, CVec, Csr};
use crate::trajectory::TrajectoryIntegrals;

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
/// Fock-space application is supported for one and two modes.
pub const MAX_STATE_MODES: usize = 2;

fn zc() -> C64 {
    C64::new(0.0, 0.0)
}

/// Truncated `(a, a^dag, a^dag a)` on `dim` levels.
pub fn fock_operators(dim: usize) -> (CMat, CMat, CMat) {
    let a = CMat::from_fn(dim, dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { zc() });
    let ad = a.adjoint();
    let n = CMat::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { zc() });
    (a, ad, n)
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Annihilators of each mode on the `dim^n_modes` product space (mode 0 most significant).
pub fn mode_annihilators(n_modes: usize, dim: usize) -> Vec<CMat> {
    let (a, _, _) = fock_operators(dim);
    let id = CMat::identity(dim, dim);
    (0..n_modes)
        .map(|k| {
            let mut op = CMat::identity(1, 1);
            for m in 0..n_modes {
                op = kron(&op, if m == k { &a } else { &id });
            }
            op
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockDensityMatrix {
    pub n_modes: usize,
    pub dim_per_mode: usize,
    pub rho: CMat,
    pub is_normalized: bool,
}

impl FockDensityMatrix {
    pub fn total_dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn from_matrix(n_modes: usize, dim_per_mode: usize, rho: CMat) -> Result<Self> {
        let total = dim_per_mode.pow(n_modes as u32);
        if rho.shape() != (total, total) {
            return Err(Error::DimensionMismatch(format!("density matrix must be {total} x {total}")));
        }
        let tr = rho.trace();
        let is_normalized = (tr - 1.0).norm() < 1e-9;
        Ok(FockDensityMatrix { n_modes, dim_per_mode, rho, is_normalized })
    }

    pub fn from_pure(n_modes: usize, dim_per_mode: usize, psi: &CVec) -> Result<Self> {
        let psi = psi / C64::new(psi.norm(), 0.0);
        Self::from_matrix(n_modes, dim_per_mode, &psi * psi.adjoint())
    }

    pub fn vacuum(n_modes: usize, dim: usize) -> Self {
        Self::fock(&vec![0; n_modes], dim).expect("vacuum fits any truncation")
    }

    pub fn fock(ns: &[usize], dim: usize) -> Result<Self> {
        if ns.iter().any(|&n| n >= dim) {
            return Err(Error::DimensionMismatch(format!("Fock level above truncation {dim}")));
        }
        let idx = ns.iter().fold(0, |acc, &n| acc * dim + n);
        let total = dim.pow(ns.len() as u32);
        let mut psi = CVec::zeros(total);
        psi[idx] = C64::new(1.0, 0.0);
        Self::from_pure(ns.len(), dim, &psi)
    }

    /// Truncated coherent state, renormalized on the retained levels.
    pub fn coherent(alphas: &[C64], dim: usize) -> Result<Self> {
        let single = |al: C64| {
            let mut v = CVec::zeros(dim);
            let mut c = C64::new((-al.norm_sqr() / 2.0).exp(), 0.0);
            for n in 0..dim {
                v[n] = c;
                c *= al / ((n + 1) as f64).sqrt();
            }
            v
        };
        let psi = alphas.iter().fold(CVec::from_element(1, C64::new(1.0, 0.0)), |acc, &al| acc.kronecker(&single(al)));
        Self::from_pure(alphas.len(), dim, &psi)
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let s = self.rho.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1e-300);
        (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm())) / s
    }

    /// Largest population of the top Fock level of any mode, relative to the trace.
    pub fn tail_mass(&self) -> f64 {
        let d = self.dim_per_mode;
        let total = self.total_dim();
        let tr = self.trace().re.abs().max(1e-300);
        (0..self.n_modes)
            .map(|k| {
                let stride = d.pow((self.n_modes - 1 - k) as u32);
                (0..total).filter(|i| (i / stride) % d == d - 1).map(|i| self.rho[(i, i)].re).sum::<f64>().abs() / tr
            })
            .fold(0.0, f64::max)
    }

    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let tail = self.tail_mass();
        if !(tail <= tol) {
            return Err(Error::TruncationOverflow { tail, tol });
        }
        Ok(())
    }

    fn vec(&self) -> Vec<C64> {
        self.rho.iter().copied().collect()
    }

    fn with_vec(&self, v: Vec<C64>) -> Self {
        let n = self.total_dim();
        FockDensityMatrix { rho: CMat::from_vec(n, n, v), is_normalized: false, ..self.clone() }
    }
}

pub fn normalize_and_trace(rho: &FockDensityMatrix) -> Result<(FockDensityMatrix, f64)> {
    let tr = rho.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::ZeroTrace);
    }
    let out = FockDensityMatrix { rho: &rho.rho / C64::new(tr, 0.0), is_normalized: true, ..rho.clone() };
    Ok((out, tr))
}

/// `Tr[A ρ]` (no normalization).
pub fn expectation(rho: &FockDensityMatrix, a: &CMat) -> Result<C64> {
    if a.shape() != rho.rho.shape() {
        return Err(Error::DimensionMismatch("observable and state dimensions differ".into()));
    }
    Ok((a * &rho.rho).trace())
}

fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}

/// `½ ‖ρ - σ‖₁` for Hermitian arguments.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    herm_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>() / 2.0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    herm_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn purity(rho: &CMat) -> f64 {
    let tr = rho.trace().re;
    (rho * rho).trace().re / (tr * tr)
}

/// Matricized factors of `ρ̄(t) = e^{w} e^{b^dag R' b‡ + b^dag r̲} e^{b^dag D̲ b} e^{bᵀ L' b + l̲ b} ρ(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionFactors {
    pub n_modes: usize,
    pub r_prime: CMat,
    pub d_under: CMat,
    pub l_prime: CMat,
    pub r_under: CVec,
    pub l_under: CVec,
    /// `w = h + δ' + κ`.
    pub log_weight: C64,
    pub t: f64,
}

impl EvolutionFactors {
    pub fn identity(n_modes: usize) -> Self {
        let n = 2 * n_modes;
        EvolutionFactors {
            n_modes,
            r_prime: CMat::zeros(n, n),
            d_under: CMat::zeros(n, n),
            l_prime: CMat::zeros(n, n),
            r_under: CVec::zeros(n),
            l_under: CVec::zeros(n),
            log_weight: zc(),
            t: 0.0,
        }
    }

    pub fn new(blocks: &PropagatorBlocks, integrals: &TrajectoryIntegrals) -> Result<Self> {
        let dq = disentangle_quadratic(blocks)?;
        let (l_under, r_under, kappa) = normal_order_linear(blocks, &integrals.l_prime, &integrals.r_prime)?;
        Ok(EvolutionFactors {
            n_modes: blocks.n_modes,
            r_prime: dq.r_prime,
            d_under: dq.d_under,
            l_prime: dq.l_prime,
            r_under,
            l_under,
            log_weight: integrals.h + dq.delta + kappa,
            t: blocks.t,
        })
    }
}

/// Column-stacked lifts of `b` and `b^dag` for the doubled mode set.
struct LiftedLadder {
    b: Vec<Csr>,
    bd: Vec<Csr>,
}

fn lift_ladder(n_modes: usize, dim: usize) -> LiftedLadder {
    let total = dim.pow(n_modes as u32);
    let id = Csr::identity(total);
    let ann: Vec<Csr> = mode_annihilators(n_modes, dim).iter().map(Csr::from_dense).collect();
    let cre: Vec<Csr> = ann.iter().map(|a| a.transpose()).collect();
    let mut b = Vec::new();
    let mut bd = Vec::new();
    // physical modes act from the left
    for k in 0..n_modes {
        b.push(Csr::kron(&id, &ann[k]));
        bd.push(Csr::kron(&id, &cre[k]));
    }
    // tilde a = right-multiply by a^dag, lifted as (a^dag)ᵀ ⊗ I = a ⊗ I for real ladders
    for k in 0..n_modes {
        b.push(Csr::kron(&ann[k], &id));
        bd.push(Csr::kron(&cre[k], &id));
    }
    LiftedLadder { b, bd }
}

fn quad_lift(m: &CMat, x: &[Csr], y: &[Csr], dim: usize) -> Csr {
    let mut acc = Csr::zeros(dim, dim);
    for i in 0..x.len() {
        for j in 0..y.len() {
            if m[(i, j)] != zc() {
                acc = acc.add(&x[i].mul(&y[j]).scale(m[(i, j)]));
            }
        }
    }
    acc
}

fn lin_lift(v: &CVec, x: &[Csr], dim: usize) -> Csr {
    x.iter().zip(v.iter()).fold(Csr::zeros(dim, dim), |acc, (op, &c)| if c != zc() { acc.add(&op.scale(c)) } else { acc })
}

fn check_modes(rho0: &FockDensityMatrix, f: &EvolutionFactors) -> Result<()> {
    if rho0.n_modes != f.n_modes {
        return Err(Error::DimensionMismatch(format!("state has {} modes, factors {}", rho0.n_modes, f.n_modes)));
    }
    if rho0.n_modes > MAX_STATE_MODES {
        return Err(Error::DimensionMismatch(format!("state application supports at most {MAX_STATE_MODES} modes")));
    }
    Ok(())
}

fn finish(out: FockDensityMatrix, tail_tol: f64) -> Result<FockDensityMatrix> {
    let res = out.hermiticity_residual();
    if !(res <= 1e-9) {
        return Err(Error::NonHermitianResult(res));
    }
    out.check_tail(tail_tol)?;
    let rho = (&out.rho + out.rho.adjoint()) * C64::new(0.5, 0.0);
    Ok(FockDensityMatrix { rho, ..out })
}

/// `ρ̄(t)` without the scalar weight `e^{w}`, via sparse superoperator exponentials.
pub fn apply_evolution(rho0: &FockDensityMatrix, f: &EvolutionFactors, tail_tol: f64) -> Result<FockDensityMatrix> {
    check_modes(rho0, f)?;
    let dim = rho0.total_dim() * rho0.total_dim();
    let lad = lift_ladder(f.n_modes, rho0.dim_per_mode);
    let s1 = quad_lift(&f.l_prime, &lad.b, &lad.b, dim).add(&lin_lift(&f.l_under, &lad.b, dim));
    let s2 = quad_lift(&f.d_under, &lad.bd, &lad.b, dim);
    let s3 = quad_lift(&f.r_prime, &lad.bd, &lad.bd, dim).add(&lin_lift(&f.r_under, &lad.bd, dim));
    let mut v = rho0.vec();
    for s in [&s1, &s2, &s3] {
        if s.nnz() > 0 {
            v = expm_multiply(s, &v)?;
        }
    }
    finish(rho0.with_vec(v), tail_tol)
}

fn powers_sum(x: C64, left: &[CMat], right: &[CMat], sigma: &CMat) -> CMat {
    // Σ_n x^n/n! left[n] σ right[n]
    let mut acc = CMat::zeros(sigma.nrows(), sigma.ncols());
    let mut c = C64::new(1.0, 0.0);
    for n in 0..left.len() {
        if c == zc() {
            break;
        }
        acc += &left[n] * sigma * &right[n] * c;
        c *= x / ((n + 1) as f64);
    }
    acc
}

/// Single-mode route through the explicit power-series form of each factor.
pub fn apply_evolution_series(rho0: &FockDensityMatrix, f: &EvolutionFactors, tail_tol: f64) -> Result<FockDensityMatrix> {
    check_modes(rho0, f)?;
    if f.n_modes != 1 {
        return Err(Error::DimensionMismatch("series route is single-mode".into()));
    }
    let d = rho0.dim_per_mode;
    let (a, ad, _) = fock_operators(d);
    // a^n and a^dag^n vanish beyond n = D-1 on the truncation
    let mut pa = vec![CMat::identity(d, d)];
    for n in 1..d {
        pa.push(&pa[n - 1] * &a);
    }
    let pad: Vec<CMat> = pa.iter().map(|m| m.transpose()).collect();
    let diag_pow = |q: C64| CMat::from_fn(d, d, |i, j| if i == j { q.powu(i as u32) } else { zc() });

    let (l, lu) = (&f.l_prime, &f.l_under);
    let left_l = expm(&(&a * &a * l[(0, 0)] + &a * lu[0]))?;
    let right_l = expm(&(&ad * &ad * l[(1, 1)] + &ad * lu[1]))?;
    let s = &left_l * powers_sum(l[(0, 1)] * 2.0, &pa, &pad, &rho0.rho) * &right_l;

    let e = expm(&f.d_under)?;
    let q = e[(1, 1)];
    if q.norm() < 1e-300 {
        return Err(Error::SingularBlock("e^{D̲} has a vanishing (2,2) entry".into()));
    }
    let (x, y, p) = (e[(0, 1)] / q, e[(1, 0)] / q, (e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)]) / q);
    let inner = diag_pow(p) * powers_sum(y, &pa, &pa, &s) * diag_pow(q);
    let s = powers_sum(x, &pad, &pad, &inner);

    let (r, ru) = (&f.r_prime, &f.r_under);
    let left_r = expm(&(&ad * &ad * r[(0, 0)] + &ad * ru[0]))?;
    let right_r = expm(&(&a * &a * r[(1, 1)] + &a * ru[1]))?;
    let s = &left_r * powers_sum(r[(0, 1)] * 2.0, &pad, &pa, &s) * &right_r;
    finish(FockDensityMatrix { rho: s, is_normalized: false, ..rho0.clone() }, tail_tol)
}

/// State dump with row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateExport {
    pub dim: usize,
    pub n_modes: usize,
    pub rho_re: Vec<f64>,
    pub rho_im: Vec<f64>,
}

impl StateExport {
    pub fn new(rho: &FockDensityMatrix) -> Self {
        let n = rho.total_dim();
        let it = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        StateExport {
            dim: rho.dim_per_mode,
            n_modes: rho.n_modes,
            rho_re: it.clone().map(|(i, j)| rho.rho[(i, j)].re).collect(),
            rho_im: it.map(|(i, j)| rho.rho[(i, j)].im).collect(),
        }
    }
}
