//! Quadratic-plus-linear bosonic algebra, its (4N+2)-dimensional matrix
//! representation, and the block-matrix disentangling formulas.
//!
//! Elements are written in Weyl-symmetric form `X = ½ξᵀAξ + vᵀξ + c` with
//! `ξ = (b, b^dag)` and `b = (a_1..a_N, ã_1..ã_N)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, expm, ibar, j_mat, logm, max_abs, CMat, CVec};
use crate::parameterization::QuadraticGenerator;

pub const MAX_COND: f64 = 1e12;

fn zc() -> C64 {
    C64::new(0.0, 0.0)
}

/// Commutator metric `[ξ_i, ξ_j] = Ω_ij`.
pub fn omega(n_modes: usize) -> CMat {
    let n = 2 * n_modes;
    CMat::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n {
            C64::new(1.0, 0.0)
        } else if i == j + n {
            C64::new(-1.0, 0.0)
        } else {
            zc()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub n_modes: usize,
    pub a: CMat,
    pub v: CVec,
    pub c: C64,
}

impl AlgebraElement {
    pub fn zero(n_modes: usize) -> Self {
        let n = 4 * n_modes;
        AlgebraElement { n_modes, a: CMat::zeros(n, n), v: CVec::zeros(n), c: zc() }
    }

    pub fn scalar(n_modes: usize, c: C64) -> Self {
        AlgebraElement { c, ..Self::zero(n_modes) }
    }

    pub fn linear(n_modes: usize, v: CVec) -> Self {
        AlgebraElement { v, ..Self::zero(n_modes) }
    }

    /// `l·b + b^dag·r`.
    pub fn from_linear_parts(l: &CVec, r: &CVec) -> Self {
        let n_modes = l.len() / 2;
        let mut v = CVec::zeros(4 * n_modes);
        v.rows_mut(0, 2 * n_modes).copy_from(l);
        v.rows_mut(2 * n_modes, 2 * n_modes).copy_from(r);
        Self::linear(n_modes, v)
    }

    /// Symmetrized product of two linear operators, `u·ξ w·ξ`.
    pub fn product_of_linear(n_modes: usize, u: &CVec, w: &CVec) -> Self {
        let om = omega(n_modes);
        let a = u * w.transpose() + w * u.transpose();
        let c = (u.transpose() * &om * w)[(0, 0)] * 0.5;
        AlgebraElement { n_modes, a, v: CVec::zeros(4 * n_modes), c }
    }

    pub fn add(&self, o: &Self) -> Self {
        AlgebraElement { n_modes: self.n_modes, a: &self.a + &o.a, v: &self.v + &o.v, c: self.c + o.c }
    }

    pub fn scale(&self, s: C64) -> Self {
        AlgebraElement { n_modes: self.n_modes, a: &self.a * s, v: &self.v * s, c: self.c * s }
    }

    pub fn commutator(&self, o: &Self) -> Self {
        let om = omega(self.n_modes);
        AlgebraElement {
            n_modes: self.n_modes,
            a: &self.a * &om * &o.a - &o.a * &om * &self.a,
            v: &self.a * &om * &o.v - &o.a * &om * &self.v,
            c: (self.v.transpose() * &om * &o.v)[(0, 0)],
        }
    }

    /// Thermo-field conjugation: swap physical and tilde modes and conjugate coefficients.
    pub fn tilde(&self) -> Self {
        let p = block_ibar(self.n_modes);
        AlgebraElement {
            n_modes: self.n_modes,
            a: &p * self.a.conjugate() * &p,
            v: &p * self.v.conjugate(),
            c: self.c.conj(),
        }
    }

    pub fn l_part(&self) -> CVec {
        self.v.rows(0, 2 * self.n_modes).into_owned()
    }

    pub fn r_part(&self) -> CVec {
        self.v.rows(2 * self.n_modes, 2 * self.n_modes).into_owned()
    }

    pub fn from_generator(gen: &QuadraticGenerator) -> Self {
        let n = 2 * gen.n_modes;
        let mut a = CMat::zeros(2 * n, 2 * n);
        a.view_mut((0, 0), (n, n)).copy_from(&(&gen.l * C64::new(2.0, 0.0)));
        a.view_mut((n, n), (n, n)).copy_from(&(&gen.r * C64::new(2.0, 0.0)));
        a.view_mut((n, 0), (n, n)).copy_from(&gen.d);
        a.view_mut((0, n), (n, n)).copy_from(&gen.d.transpose());
        AlgebraElement { n_modes: gen.n_modes, a, v: CVec::zeros(2 * n), c: gen.scalar - gen.d.trace() * 0.5 }
    }

    /// Normal-ordered quadratic parameters; the linear part is dropped.
    pub fn to_generator(&self) -> QuadraticGenerator {
        let n = 2 * self.n_modes;
        let d = self.a.view((n, 0), (n, n)).into_owned();
        let scalar = self.c + d.trace() * 0.5;
        QuadraticGenerator {
            n_modes: self.n_modes,
            r: self.a.view((n, n), (n, n)) * C64::new(0.5, 0.0),
            d,
            l: self.a.view((0, 0), (n, n)) * C64::new(0.5, 0.0),
            scalar,
        }
    }
}

fn block_ibar(n_modes: usize) -> CMat {
    let n = 2 * n_modes;
    let ib = ibar(n_modes);
    let mut p = CMat::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(&ib);
    p.view_mut((n, n), (n, n)).copy_from(&ib);
    p
}

/// Coefficients of the adjoint of a linear operator `v·ξ`.
pub fn dagger_linear(n_modes: usize, v: &CVec) -> CVec {
    let n = 2 * n_modes;
    let mut out = CVec::zeros(2 * n);
    for i in 0..n {
        out[i] = v[n + i].conj();
        out[n + i] = v[i].conj();
    }
    out
}

/// Coefficients of the tilde partner of a linear operator `v·ξ`.
pub fn tilde_linear(n_modes: usize, v: &CVec) -> CVec {
    block_ibar(n_modes) * v.conjugate()
}

/// Matrix of an element in the (4N+2)-dimensional representation.
///
/// Index layout: 0, then labels 1..2N, then labels -2N..-1 (so the negative
/// block is stored reversed), then -0.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix {
    pub n_modes: usize,
    pub matrix: CMat,
}

struct Idx {
    n: usize,
    o: usize,
    m: usize,
    z: usize,
}

fn idx(n_modes: usize) -> Idx {
    let n = 2 * n_modes;
    Idx { n, o: 1, m: 1 + n, z: 1 + 2 * n }
}

pub fn rep_of_element(x: &AlgebraElement) -> RepMatrix {
    let Idx { n, o, m, z } = idx(x.n_modes);
    let j = j_mat(n);
    let abb = x.a.view((0, 0), (n, n)).into_owned();
    let add = x.a.view((n, n), (n, n)).into_owned();
    let adb = x.a.view((n, 0), (n, n)).into_owned();
    let l = x.l_part();
    let r = x.r_part();
    let mut p = CMat::zeros(z + 1, z + 1);
    p.view_mut((o, 0), (n, 1)).copy_from(&r);
    p.view_mut((o, o), (n, n)).copy_from(&adb);
    p.view_mut((o, m), (n, n)).copy_from(&(&add * &j));
    p.view_mut((m, 0), (n, 1)).copy_from(&(-(&j * &l)));
    p.view_mut((m, o), (n, n)).copy_from(&(-(&j * &abb)));
    p.view_mut((m, m), (n, n)).copy_from(&(-(&j * adb.transpose() * &j)));
    p[(z, 0)] = x.c * -2.0;
    p.view_mut((z, o), (1, n)).copy_from(&(-l.transpose()));
    p.view_mut((z, m), (1, n)).copy_from(&(-(r.transpose() * &j)));
    RepMatrix { n_modes: x.n_modes, matrix: p }
}

pub fn rep_of_generator(gen: &QuadraticGenerator) -> RepMatrix {
    rep_of_element(&AlgebraElement::from_generator(gen))
}

/// Blocks of `exp(rep(Q) t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorBlocks {
    pub n_modes: usize,
    pub n11: CMat,
    pub n1m1: CMat,
    pub nm11: CMat,
    pub nm1m1: CMat,
    pub n10: CVec,
    pub nm10: CVec,
    pub nm01: CVec,
    pub nm0m1: CVec,
    pub c: C64,
    pub t: f64,
}

impl PropagatorBlocks {
    pub fn identity(n_modes: usize) -> Self {
        Self::from_matrix(n_modes, &CMat::identity(4 * n_modes + 2, 4 * n_modes + 2), 0.0)
    }

    pub fn from_matrix(n_modes: usize, p: &CMat, t: f64) -> Self {
        let Idx { n, o, m, z } = idx(n_modes);
        PropagatorBlocks {
            n_modes,
            n11: p.view((o, o), (n, n)).into_owned(),
            n1m1: p.view((o, m), (n, n)).into_owned(),
            nm11: p.view((m, o), (n, n)).into_owned(),
            nm1m1: p.view((m, m), (n, n)).into_owned(),
            n10: p.view((o, 0), (n, 1)).column(0).into_owned(),
            nm10: p.view((m, 0), (n, 1)).column(0).into_owned(),
            nm01: p.view((z, o), (1, n)).transpose().column(0).into_owned(),
            nm0m1: p.view((z, m), (1, n)).transpose().column(0).into_owned(),
            c: p[(z, 0)],
            t,
        }
    }

    pub fn assemble(&self) -> CMat {
        let Idx { n, o, m, z } = idx(self.n_modes);
        let mut p = CMat::zeros(z + 1, z + 1);
        p[(0, 0)] = C64::new(1.0, 0.0);
        p[(z, z)] = C64::new(1.0, 0.0);
        p.view_mut((o, o), (n, n)).copy_from(&self.n11);
        p.view_mut((o, m), (n, n)).copy_from(&self.n1m1);
        p.view_mut((m, o), (n, n)).copy_from(&self.nm11);
        p.view_mut((m, m), (n, n)).copy_from(&self.nm1m1);
        p.view_mut((o, 0), (n, 1)).copy_from(&self.n10);
        p.view_mut((m, 0), (n, 1)).copy_from(&self.nm10);
        p.view_mut((z, o), (1, n)).copy_from(&self.nm01.transpose());
        p.view_mut((z, m), (1, n)).copy_from(&self.nm0m1.transpose());
        p[(z, 0)] = self.c;
        p
    }
}

pub fn propagator_blocks(rep: &RepMatrix, t: f64) -> Result<PropagatorBlocks> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("propagation time {t} must be finite and >= 0")));
    }
    let p = expm(&(&rep.matrix * C64::new(t, 0.0)))?;
    Ok(PropagatorBlocks::from_matrix(rep.n_modes, &p, t))
}

/// `e^{Qt} = e^{δ'} e^{b^dag R' b‡} e^{b^dag D̲ b} e^{bᵀ L' b}` for quadratic Q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentangledQuadratic {
    pub n_modes: usize,
    pub r_prime: CMat,
    pub l_prime: CMat,
    pub d_under: CMat,
    pub delta: C64,
}

impl DisentangledQuadratic {
    pub fn r_element(&self) -> AlgebraElement {
        let gen = QuadraticGenerator { r: self.r_prime.clone(), ..QuadraticGenerator::zero(self.n_modes) };
        AlgebraElement::from_generator(&gen)
    }

    pub fn l_element(&self) -> AlgebraElement {
        let gen = QuadraticGenerator { l: self.l_prime.clone(), ..QuadraticGenerator::zero(self.n_modes) };
        AlgebraElement::from_generator(&gen)
    }

    /// The operator `b^dag D̲ b` exactly (no extra scalar).
    pub fn d_element(&self) -> AlgebraElement {
        let gen = QuadraticGenerator { d: self.d_under.clone(), ..QuadraticGenerator::zero(self.n_modes) };
        AlgebraElement::from_generator(&gen)
    }

    /// Product of the factor exponentials in the representation.
    pub fn recompose(&self) -> Result<CMat> {
        let e = |x: &AlgebraElement| expm(&rep_of_element(x).matrix);
        let s = AlgebraElement::scalar(self.n_modes, self.delta);
        Ok(e(&s)? * e(&self.r_element())? * e(&self.d_element())? * e(&self.l_element())?)
    }

    /// Normally ordered middle factor `D' = e^{D̲} - I`.
    pub fn d_prime(&self) -> Result<CMat> {
        let n = self.d_under.nrows();
        Ok(expm(&self.d_under)? - CMat::identity(n, n))
    }
}

pub fn disentangle_quadratic(blocks: &PropagatorBlocks) -> Result<DisentangledQuadratic> {
    let n = 2 * blocks.n_modes;
    let j = j_mat(n);
    let ni = checked_inverse(&blocks.nm1m1, MAX_COND, "N_{-1,-1}")?;
    let d_under = -(&j * logm(&blocks.nm1m1)? * &j).transpose();
    let half = C64::new(0.5, 0.0);
    let r_prime = &blocks.n1m1 * &ni * &j * half;
    let l_prime = -(&j * &ni * &blocks.nm11) * half;
    let delta = (d_under.trace() - blocks.c) * half;
    Ok(DisentangledQuadratic { n_modes: blocks.n_modes, r_prime, l_prime, d_under, delta })
}

/// Move a linear increment applied at time τ through `e^{Qτ}`.
pub fn reorder_linear_increment(blocks: &PropagatorBlocks, dl: &CVec, dr: &CVec) -> (CVec, CVec) {
    let j = j_mat(2 * blocks.n_modes);
    let dlp = blocks.n11.transpose() * dl + blocks.nm11.transpose() * (&j * dr);
    let drp = &j * blocks.n1m1.transpose() * dl + &j * blocks.nm1m1.transpose() * &j * dr;
    (dlp, drp)
}

/// Largest disagreement between the reordering formula and the two redundant
/// readings of the conjugated linear element in the representation.
pub fn reorder_redundancy_residual(blocks: &PropagatorBlocks, dl: &CVec, dr: &CVec) -> Result<f64> {
    let Idx { n, o, m, z } = idx(blocks.n_modes);
    let j = j_mat(n);
    let p = blocks.assemble();
    let pinv = checked_inverse(&p, MAX_COND, "propagator")?;
    let x = rep_of_element(&AlgebraElement::from_linear_parts(dl, dr)).matrix;
    let y = &pinv * x * &p;
    let (dlp, drp) = reorder_linear_increment(blocks, dl, dr);
    let r_a: CVec = y.view((o, 0), (n, 1)).column(0).into_owned();
    let l_a: CVec = -(&j * y.view((m, 0), (n, 1)).column(0));
    let l_b: CVec = -y.view((z, o), (1, n)).transpose().column(0);
    let r_b: CVec = -(&j * y.view((z, m), (1, n)).transpose().column(0));
    let res = [(&r_a - &drp), (&r_b - &drp), (&l_a - &dlp), (&l_b - &dlp)]
        .iter()
        .map(|v| v.iter().fold(0.0f64, |a, z| a.max(z.norm())))
        .fold(0.0, f64::max);
    Ok(res)
}

/// Normal-ordered linear parts `(l̲, r̲)` and the scalar `κ` generated by the reordering.
pub fn normal_order_linear(blocks: &PropagatorBlocks, lp: &CVec, rp: &CVec) -> Result<(CVec, CVec, C64)> {
    let n = 2 * blocks.n_modes;
    let j = j_mat(n);
    let ni = checked_inverse(&blocks.nm1m1, MAX_COND, "N_{-1,-1}")?;
    let r_under = &j * ni.transpose() * &j * rp;
    let l_under = lp - (&ni * &blocks.nm11).transpose() * (&j * rp);
    let kappa = ((r_under.transpose() * &j * &blocks.nm1m1 * &j * &l_under)[(0, 0)] - lp.dot(rp)) * 0.5;
    Ok((l_under, r_under, kappa))
}

/// Parameters of `⟨⟨I| e^{Qt} = e^{δ''} ⟨⟨0| e^{bᵀ L'' b}` restricted to the vacuum bra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmBlocks {
    pub n_modes: usize,
    pub l_pp_full: CMat,
    pub delta_pp: C64,
}

impl PovmBlocks {
    pub fn lpp(&self) -> CMat {
        let n = self.n_modes;
        self.l_pp_full.view((0, 0), (n, n)).into_owned()
    }

    pub fn lpp_breve(&self) -> CMat {
        let n = self.n_modes;
        self.l_pp_full.view((0, n), (n, n)).into_owned()
    }
}

pub fn povm_blocks(blocks: &PropagatorBlocks) -> Result<PovmBlocks> {
    let Idx { n, o, m, .. } = idx(blocks.n_modes);
    let mut tm = CMat::identity(n * 2 + 2, n * 2 + 2);
    tm.view_mut((m, o), (n, n)).copy_from(&(-(j_mat(n) * ibar(blocks.n_modes))));
    let shifted = PropagatorBlocks::from_matrix(blocks.n_modes, &(tm * blocks.assemble()), blocks.t);
    // only L' and Tr D̲ = -log det N_{-1,-1} are needed, so no matrix logarithm is taken;
    // the principal log of the determinant fixes e^{δ''} up to a sign
    let jn = j_mat(n);
    let ni = checked_inverse(&shifted.nm1m1, MAX_COND, "N_{-1,-1}")?;
    let l_prime = -(&jn * &ni * &shifted.nm11) * C64::new(0.5, 0.0);
    let det = shifted.nm1m1.determinant();
    let delta_pp = (-det.ln() - shifted.c) * 0.5;
    let l_pp_full = l_prime - ibar(blocks.n_modes) * C64::new(0.5, 0.0);
    Ok(PovmBlocks { n_modes: blocks.n_modes, l_pp_full, delta_pp })
}

/// Residual of the paired-block (tilde) symmetry of a propagator.
pub fn pairing_residual(blocks: &PropagatorBlocks) -> f64 {
    // tilde conjugation acts on the representation as conjugation by a fixed permutation
    let nm = blocks.n_modes;
    let Idx { n, o, m, z } = idx(nm);
    let ib = ibar(nm);
    let j = j_mat(n);
    let mut perm = CMat::identity(z + 1, z + 1);
    perm.view_mut((o, o), (n, n)).copy_from(&ib);
    perm.view_mut((m, m), (n, n)).copy_from(&(&j * &ib * &j));
    let p = blocks.assemble();
    max_abs(&(&perm * p.conjugate() * &perm - p))
}
