//! Dense and sparse matrix helpers shared by the pipeline.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.abs()))
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Anti-diagonal matrix of ones.
pub fn j_mat(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i + j == n - 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Swap matrix exchanging the physical and tilde halves of a 2N vector.
pub fn ibar(n_modes: usize) -> CMat {
    let n = n_modes;
    CMat::from_fn(2 * n, 2 * n, |i, j| {
        if (i < n && j == i + n) || (i >= n && j + n == i) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Matrix with x = X b + X* b^dag-column for the quadrature vector (q1,p1,..) in terms of
/// b = (a_1..a_N, tilde a_1..tilde a_N). Columns of the tilde half are zero.
pub fn x_under(n_modes: usize) -> CMat {
    let s = 1.0 / 2f64.sqrt();
    let mut x = CMat::zeros(2 * n_modes, 2 * n_modes);
    for n in 0..n_modes {
        x[(2 * n, n)] = C64::new(s, 0.0);
        x[(2 * n + 1, n)] = C64::new(0.0, -s);
    }
    x
}

/// Block unitary converting (a1, a1^dag, a2, ..) ordering into quadratures.
pub fn x_fock(n_modes: usize) -> CMat {
    let s = 1.0 / 2f64.sqrt();
    let mut x = CMat::zeros(2 * n_modes, 2 * n_modes);
    for n in 0..n_modes {
        x[(2 * n, 2 * n)] = C64::new(s, 0.0);
        x[(2 * n, 2 * n + 1)] = C64::new(s, 0.0);
        x[(2 * n + 1, 2 * n)] = C64::new(0.0, -s);
        x[(2 * n + 1, 2 * n + 1)] = C64::new(0.0, s);
    }
    x
}

/// Symplectic form, direct sum of [[0,1],[-1,0]].
pub fn sigma(n_modes: usize) -> RMat {
    let mut s = RMat::zeros(2 * n_modes, 2 * n_modes);
    for n in 0..n_modes {
        s[(2 * n, 2 * n + 1)] = 1.0;
        s[(2 * n + 1, 2 * n)] = -1.0;
    }
    s
}

pub fn expm(a: &CMat) -> Result<CMat> {
    if !all_finite(a) {
        return Err(Error::MatrixExpFailure);
    }
    let e = a.exp();
    if all_finite(&e) {
        Ok(e)
    } else {
        Err(Error::MatrixExpFailure)
    }
}

/// Ratio of largest to smallest singular value (infinite when singular).
pub fn condition_number(a: &CMat) -> f64 {
    let sv = SVD::new(a.clone(), false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse guarded by a condition-number limit.
pub fn checked_inverse(a: &CMat, max_cond: f64, what: &str) -> Result<CMat> {
    let cond = condition_number(a);
    if !cond.is_finite() || cond > max_cond {
        return Err(Error::SingularBlock(format!("{what}: condition number {cond:e}")));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularBlock(format!("{what}: LU failed")))
}

fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    // nodes mapped to [0,1]
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

fn sqrt_upper(t: &CMat) -> CMat {
    let n = t.nrows();
    let mut u = CMat::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            u[(i, j)] = s / (u[(i, i)] + u[(j, j)]);
        }
    }
    u
}

/// Principal matrix logarithm by inverse scaling and squaring on the Schur form.
///
/// Rejects matrices with an eigenvalue on the closed negative real axis.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if !all_finite(a) {
        return Err(Error::LogBranchFailure("non-finite input".into()));
    }
    let scale = max_abs(a).max(1e-300);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::LogBranchFailure("Schur decomposition did not converge".into()))?;
    let (q, mut t) = schur.unpack();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    for i in 0..n {
        let l = t[(i, i)];
        if l.norm() <= 1e-300 || l.norm() < 1e-14 * scale {
            return Err(Error::LogBranchFailure(format!("eigenvalue {l} is zero")));
        }
        if l.re < 0.0 && l.im.abs() <= 1e-13 * l.norm() {
            return Err(Error::LogBranchFailure(format!("eigenvalue {l} on the negative real axis")));
        }
    }
    let id = CMat::identity(n, n);
    let mut k = 0;
    while max_abs(&(&t - &id)) > 0.2 && k < 64 {
        t = sqrt_upper(&t);
        k += 1;
    }
    let x = &t - &id;
    let mut l = CMat::zeros(n, n);
    for (node, w) in gauss_legendre(12) {
        let m = &id + &x * C64::new(node, 0.0);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::LogBranchFailure("Pade denominator singular".into()))?;
        l += &x * inv * C64::new(w, 0.0);
    }
    l *= C64::new(2f64.powi(k), 0.0);
    Ok(&q * l * q.adjoint())
}

/// Compressed sparse row complex matrix; just enough for lifted Fock operators.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Csr { n_rows, n_cols, indptr, indices, data };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.n_rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.n_rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.data[k] != C64::new(0.0, 0.0) {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Csr::from_triplets(n_rows, n_cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Csr::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    pub fn from_dense(m: &CMat) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Csr::from_triplets(m.nrows(), m.ncols(), trip)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.push((i, self.indices[k], self.data[k]));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let trip = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Csr::from_triplets(self.n_cols, self.n_rows, trip)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m.prune();
        m
    }

    pub fn add(&self, other: &Csr) -> Self {
        let mut trip = self.triplets();
        trip.extend(other.triplets());
        Csr::from_triplets(self.n_rows, self.n_cols, trip)
    }

    pub fn mul(&self, other: &Csr) -> Self {
        let mut trip = Vec::new();
        for i in 0..self.n_rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let (j, a) = (self.indices[k], self.data[k]);
                for kk in other.indptr[j]..other.indptr[j + 1] {
                    trip.push((i, other.indices[kk], a * other.data[kk]));
                }
            }
        }
        Csr::from_triplets(self.n_rows, other.n_cols, trip)
    }

    pub fn kron(a: &Csr, b: &Csr) -> Self {
        let mut trip = Vec::with_capacity(a.nnz() * b.nnz());
        for (i, j, v) in a.triplets() {
            for (k, l, w) in b.triplets() {
                trip.push((i * b.n_rows + k, j * b.n_cols + l, v * w));
            }
        }
        Csr::from_triplets(a.n_rows * b.n_rows, a.n_cols * b.n_cols, trip)
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_rows];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * v[self.indices[k]];
            }
            *o = s;
        }
        out
    }

    /// `self * m` for a dense right factor.
    pub fn mul_dense(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n_rows, m.ncols());
        for c in 0..m.ncols() {
            let col = m.column(c);
            for i in 0..self.n_rows {
                let mut s = C64::new(0.0, 0.0);
                for k in self.indptr[i]..self.indptr[i + 1] {
                    s += self.data[k] * col[self.indices[k]];
                }
                out[(i, c)] = s;
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n_cols];
        for (k, &j) in self.indices.iter().enumerate() {
            col[j] += self.data[k].norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// exp(A) v by scaled Taylor steps. A is never formed densely.
pub fn expm_multiply(a: &Csr, v: &[C64]) -> Result<Vec<C64>> {
    let norm = a.norm1();
    let steps = norm.ceil().max(1.0) as usize;
    let inv = C64::new(1.0 / steps as f64, 0.0);
    let mut cur = v.to_vec();
    for _ in 0..steps {
        let mut acc = cur.clone();
        let mut term = cur;
        let mut small = 0;
        for k in 1..200 {
            let next = a.matvec(&term);
            let f = inv / k as f64;
            term = next.into_iter().map(|z| z * f).collect();
            for (x, t) in acc.iter_mut().zip(&term) {
                *x += t;
            }
            let tn = inf_norm(&term);
            if tn <= 1e-18 * inf_norm(&acc) || tn == 0.0 {
                small += 1;
                if small >= 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        if acc.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::MatrixExpFailure);
        }
        cur = acc;
    }
    Ok(cur)
}

/// Eigenvalues from the diagonal of the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let (_, t) = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::LogBranchFailure("Schur decomposition did not converge".into()))?
        .unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}
