//! Generator {R, D, L} and noise couplings from the physical model.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::lie_rep::{dagger_linear, tilde_linear, AlgebraElement};
use crate::linalg::{ibar, max_abs, sigma, to_complex, x_under, CMat, CVec};
use crate::system_model::SystemSpec;

/// Normal-ordered `Q = b^dag R b‡ + b^dag D b + bᵀ L b + scalar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticGenerator {
    pub n_modes: usize,
    pub r: CMat,
    pub d: CMat,
    pub l: CMat,
    pub scalar: C64,
}

impl QuadraticGenerator {
    pub fn zero(n_modes: usize) -> Self {
        let n = 2 * n_modes;
        QuadraticGenerator { n_modes, r: CMat::zeros(n, n), d: CMat::zeros(n, n), l: CMat::zeros(n, n), scalar: C64::new(0.0, 0.0) }
    }

    /// Largest violation of the tilde-pairing block structure.
    ///
    /// `R` and `L` must be symmetric with blocks [[X, Y], [Yᵀ, X*]] and Y Hermitian;
    /// `D` must have blocks [[X, Y], [Y*, X*]].
    pub fn block_residual(&self) -> f64 {
        let ib = ibar(self.n_modes);
        let sym = |m: &CMat| max_abs(&(m - m.transpose()));
        let til = |m: &CMat| max_abs(&(&ib * m.conjugate() * &ib - m));
        let n = self.n_modes;
        let herm = |m: &CMat| {
            let y = m.view((0, n), (n, n)).into_owned();
            max_abs(&(&y - y.adjoint()))
        };
        [sym(&self.r), sym(&self.l), til(&self.r), til(&self.l), til(&self.d), herm(&self.r), herm(&self.l)]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Block (physical, physical) and (physical, tilde) entries of a 2N matrix.
    pub fn split(m: &CMat, n_modes: usize) -> (CMat, CMat) {
        (m.view((0, 0), (n_modes, n_modes)).into_owned(), m.view((0, n_modes), (n_modes, n_modes)).into_owned())
    }
}

/// Constant maps from the 2L current samples to the linear increments:
/// `dl = yᵀdt W_l`, `drᵀ = yᵀdt W_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCouplings {
    pub w_l: CMat,
    pub w_r: CMat,
}

impl NoiseCouplings {
    /// `(dl, dr)` for one record sample scaled by `dt`.
    pub fn increments(&self, y: &[f64], dt: f64) -> (CVec, CVec) {
        let ydt = CVec::from_iterator(y.len(), y.iter().map(|v| C64::new(v * dt, 0.0)));
        (self.w_l.transpose() * &ydt, self.w_r.transpose() * &ydt)
    }
}

struct Transforms {
    x: CMat,
    ib: CMat,
}

impl Transforms {
    fn tt(&self, a: &CMat) -> CMat {
        self.x.transpose() * a * &self.x
    }
    fn t(&self, a: &CMat) -> CMat {
        self.x.transpose() * a * self.x.conjugate()
    }
    fn dd(&self, a: &CMat) -> CMat {
        self.x.adjoint() * a * &self.x
    }
    fn d(&self, a: &CMat) -> CMat {
        self.x.adjoint() * a * self.x.conjugate()
    }
    fn bar(&self, a: &CMat) -> CMat {
        &self.ib * a * &self.ib
    }
}

fn symmetrize(m: CMat) -> CMat {
    (&m + m.transpose()) * C64::new(0.5, 0.0)
}

pub fn compute_generator(spec: &SystemSpec) -> QuadraticGenerator {
    let n = spec.n_modes;
    let tf = Transforms { x: x_under(n), ib: ibar(n) };
    let ib = &tf.ib;
    let g = to_complex(&spec.g);
    let (c, m) = (&spec.c, &spec.m);
    let comp_b = c.adjoint() * c;
    let comp_f = c.transpose() * m.conjugate() * m.adjoint() * c;
    let comp_k = c.transpose() * m.conjugate() * m.transpose() * c.conjugate();
    let bs = comp_b.conjugate();
    let ks = comp_k.conjugate();
    let fd = comp_f.adjoint();
    let half = C64::new(0.5, 0.0);
    let mi = C64::new(0.0, -1.0);

    let l = (tf.tt(&g) - tf.bar(&tf.d(&g))) * (mi * half) + ib * tf.dd(&comp_b) - tf.tt(&comp_b) * half
        - (tf.bar(&tf.d(&bs)) + tf.tt(&comp_f) + tf.t(&comp_k) * ib + ib * tf.dd(&ks) + tf.bar(&tf.d(&fd))) * half;
    let r = (tf.d(&g) - tf.bar(&tf.tt(&g))) * (mi * half) + ib * tf.t(&comp_b) - tf.d(&comp_b) * half
        - tf.bar(&tf.tt(&bs)) * half
        - (tf.d(&comp_f) + tf.dd(&comp_k) * ib + ib * tf.t(&ks) + tf.bar(&tf.tt(&fd))) * half;
    let d = (tf.dd(&g) - tf.bar(&tf.t(&g))) * mi + ib * tf.tt(&comp_b) + tf.d(&bs) * ib
        - (tf.dd(&comp_b) + tf.dd(&bs) + tf.bar(&tf.t(&comp_b)) + tf.bar(&tf.t(&bs))) * half
        - tf.dd(&comp_f)
        - tf.d(&comp_k) * ib
        - ib * tf.tt(&ks)
        - tf.bar(&tf.t(&fd));
    // constant left over when the Lindblad terms are normal ordered
    let sig = to_complex(&sigma(n));
    let weyl = -(C64::new(0.0, 1.0) * (sig * comp_b.transpose()).trace()).re * 0.5;
    let scalar = C64::new(weyl, 0.0) + d.trace() * half;
    QuadraticGenerator { n_modes: n, r: symmetrize(r), d, l: symmetrize(l), scalar }
}

pub fn compute_noise_couplings(spec: &SystemSpec) -> NoiseCouplings {
    let n = spec.n_modes;
    let (x, ib) = (x_under(n), ibar(n));
    let (c, m) = (&spec.c, &spec.m);
    let a = m.adjoint() * c;
    let b = m.transpose() * c.conjugate();
    NoiseCouplings { w_l: &a * &x + &b * x.conjugate() * &ib, w_r: &a * x.conjugate() + &b * &x * &ib }
}

/// Quadrature operator `x_m` as a linear element coefficient vector.
fn quadrature(n_modes: usize, m: usize) -> CVec {
    let x = x_under(n_modes);
    let n = 2 * n_modes;
    CVec::from_fn(2 * n, |i, _| if i < n { x[(m, i)] } else { x[(m, i - n)].conj() })
}

/// Independent route: assemble Q and the increment operators directly in the algebra.
pub fn generator_by_operator_algebra(spec: &SystemSpec) -> (QuadraticGenerator, NoiseCouplings) {
    let n = spec.n_modes;
    let xs: Vec<CVec> = (0..2 * n).map(|m| quadrature(n, m)).collect();
    let mut h = AlgebraElement::zero(n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            let g = spec.g[(i, j)];
            if g != 0.0 {
                h = h.add(&AlgebraElement::product_of_linear(n, &xs[i], &xs[j]).scale(C64::new(0.5 * g, 0.0)));
            }
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut q = h.scale(-i).add(&h.tilde().scale(i));
    let cs: Vec<CVec> = (0..spec.n_channels)
        .map(|k| xs.iter().enumerate().fold(CVec::zeros(4 * n), |acc, (m, x)| acc + x * spec.c[(k, m)]))
        .collect();
    for cv in &cs {
        let cd = dagger_linear(n, cv);
        let cdc = AlgebraElement::product_of_linear(n, &cd, cv);
        q = q
            .add(&AlgebraElement::product_of_linear(n, cv, &tilde_linear(n, cv)))
            .add(&cdc.scale(C64::new(-0.5, 0.0)))
            .add(&cdc.tilde().scale(C64::new(-0.5, 0.0)));
    }
    let md = spec.m.adjoint();
    let mut w_l = CMat::zeros(2 * spec.n_channels, 2 * n);
    let mut w_r = CMat::zeros(2 * spec.n_channels, 2 * n);
    for j in 0..2 * spec.n_channels {
        let v = cs.iter().enumerate().fold(CVec::zeros(4 * n), |acc, (k, cv)| acc + cv * md[(j, k)]);
        let s = &v + tilde_linear(n, &v);
        q = q.add(&AlgebraElement::product_of_linear(n, &s, &s).scale(C64::new(-0.5, 0.0)));
        for a in 0..2 * n {
            w_l[(j, a)] = s[a];
            w_r[(j, a)] = s[2 * n + a];
        }
    }
    (q.to_generator(), NoiseCouplings { w_l, w_r })
}
