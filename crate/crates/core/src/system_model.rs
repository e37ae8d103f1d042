//! Physical model {G, C, M}: validation, Fock-form conversion and built-in examples.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, max_abs_real, sigma, x_fock, CMat, RMat};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Quadratic Hamiltonian `G`, Lindblad coefficients `C` and measurement setting `M`.
///
/// Quadratures are ordered (q1, p1, .., qN, pN). The current vector has 2L
/// real components; components whose column of `M` vanishes are unmonitored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n_modes: usize,
    pub n_channels: usize,
    pub g: RMat,
    pub c: CMat,
    pub m: CMat,
}

impl SystemSpec {
    pub fn new(g: RMat, c: CMat, m: CMat) -> Result<Self> {
        let spec = SystemSpec { n_modes: g.nrows() / 2, n_channels: c.nrows(), g, c, m };
        validate_spec(spec)
    }

    /// Diagonal of M M^dag.
    pub fn efficiencies(&self) -> Vec<f64> {
        let mm = &self.m * self.m.adjoint();
        (0..self.n_channels).map(|k| mm[(k, k)].re).collect()
    }

    /// Which of the 2L current components carry signal.
    pub fn monitored(&self) -> Vec<bool> {
        (0..2 * self.n_channels)
            .map(|j| self.m.column(j).iter().any(|z| z.norm() > 0.0))
            .collect()
    }
}

pub fn validate_spec(spec: SystemSpec) -> Result<SystemSpec> {
    validate_spec_with_tol(spec, DEFAULT_TOL)
}

pub fn validate_spec_with_tol(spec: SystemSpec, tol: f64) -> Result<SystemSpec> {
    let (n, l) = (spec.n_modes, spec.n_channels);
    if n == 0 || l == 0 {
        return Err(Error::DimensionMismatch("need at least one mode and one channel".into()));
    }
    if spec.g.shape() != (2 * n, 2 * n) {
        return Err(Error::DimensionMismatch(format!("G is {:?}, expected {}x{}", spec.g.shape(), 2 * n, 2 * n)));
    }
    if spec.c.shape() != (l, 2 * n) {
        return Err(Error::DimensionMismatch(format!("C is {:?}, expected {}x{}", spec.c.shape(), l, 2 * n)));
    }
    if spec.m.shape() != (l, 2 * l) {
        return Err(Error::DimensionMismatch(format!("M is {:?}, expected {}x{}", spec.m.shape(), l, 2 * l)));
    }
    let asym = max_abs_real(&(&spec.g - spec.g.transpose()));
    if asym > 0.0 {
        return Err(Error::NonSymmetricG(asym));
    }
    if !spec.g.iter().all(|x| x.is_finite())
        || !spec.c.iter().chain(spec.m.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::DimensionMismatch("non-finite matrix entry".into()));
    }
    let mm = &spec.m * spec.m.adjoint();
    for i in 0..l {
        for j in 0..l {
            if i != j && mm[(i, j)].norm() > tol {
                return Err(Error::MeasurementSettingInvalid(format!(
                    "M M^dag has off-diagonal entry ({i},{j}) = {}",
                    mm[(i, j)]
                )));
            }
        }
        let eta = mm[(i, i)].re;
        if eta < -tol || eta > 1.0 + tol {
            return Err(Error::MeasurementSettingInvalid(format!("efficiency {eta} of channel {i} outside [0,1]")));
        }
    }
    Ok(spec)
}

/// Hamiltonian and Lindblads in terms of (a1, a1^dag, .., aN, aN^dag).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockFormSpec {
    pub f: CMat,
    pub z: CMat,
    pub m: CMat,
}

pub fn from_fock_form(ff: &FockFormSpec) -> Result<SystemSpec> {
    let herm = max_abs(&(&ff.f - ff.f.adjoint()));
    if herm > DEFAULT_TOL {
        return Err(Error::NonHermitianF(herm));
    }
    let n = ff.f.nrows() / 2;
    if ff.f.shape() != (2 * n, 2 * n) || ff.z.ncols() != 2 * n {
        return Err(Error::DimensionMismatch("F must be 2N x 2N and Z must have 2N columns".into()));
    }
    let x = x_fock(n);
    let gc = &x * &ff.f * x.adjoint();
    let imag = gc.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if imag > 1e-10 {
        return Err(Error::NonHermitianF(imag));
    }
    // symmetrize away rounding so the exact-equality check in validation holds
    let g = gc.map(|z| z.re);
    let g = (&g + g.transpose()) * 0.5;
    let c = &ff.z * x.adjoint();
    SystemSpec::new(g, c, ff.m.clone())
}

pub fn to_fock_form(spec: &SystemSpec) -> FockFormSpec {
    let x = x_fock(spec.n_modes);
    let g = spec.g.map(|v| C64::new(v, 0.0));
    FockFormSpec { f: x.adjoint() * g * &x, z: &spec.c * &x, m: spec.m.clone() }
}

pub fn symplectic_form(n_modes: usize) -> RMat {
    sigma(n_modes)
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("{name} = {v} must be finite and >= 0")));
    }
    Ok(())
}

fn check_eff(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::MeasurementSettingInvalid(format!("efficiency eta = {eta} must lie in [0,1]")));
    }
    Ok(())
}

/// Single mode damped into a thermal bath, x-quadrature homodyne on the decay channel.
pub fn builtin_homodyne_thermal(gamma: f64, k: f64, eta: f64) -> Result<SystemSpec> {
    check_rate("K", k)?;
    check_eff(eta)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} must be > 0")));
    }
    let pre = (gamma / (2.0 * k + 1.0)).sqrt();
    let s = (k * (k + 1.0)).sqrt();
    let z = CMat::from_row_slice(
        2,
        2,
        &[C64::new(pre * (k + 1.0), 0.0), C64::new(-pre * k, 0.0), C64::new(pre * s, 0.0), C64::new(pre * s, 0.0)],
    );
    let mut m = CMat::zeros(2, 4);
    m[(0, 0)] = C64::new(eta.sqrt(), 0.0);
    from_fock_form(&FockFormSpec { f: CMat::zeros(2, 2), z, m })
}

/// Squeezing Hamiltonian in Fock form after the angle has been absorbed by a canonical rotation.
pub fn squeeze_fock_hamiltonian(chi: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -chi / 2.0), C64::new(0.0, chi / 2.0), C64::new(0.0, 0.0)])
}

/// Optomechanical position measurement with parametric squeezing at angle `theta`.
pub fn builtin_optomech_squeezing(mu: f64, eta: f64, gamma: f64, k_th: f64, chi: f64, theta: f64) -> Result<SystemSpec> {
    check_rate("mu", mu)?;
    check_rate("K_th", k_th)?;
    check_rate("chi", chi)?;
    check_eff(eta)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} must be > 0")));
    }
    if !theta.is_finite() {
        return Err(Error::ParameterOutOfRange("theta must be finite".into()));
    }
    let mp = mu * eta;
    let k = k_th + mu * (1.0 - eta) / gamma;
    let rate = gamma * k + mp;
    if rate <= 0.0 {
        return Err(Error::ParameterOutOfRange("gamma*K + mu' must be positive".into()));
    }
    let s = rate.sqrt();
    let h = (gamma / 2.0).sqrt();
    let z0 = C64::new(0.0, 0.0);
    let c = CMat::from_row_slice(3, 2, &[C64::new(s, 0.0), z0, z0, C64::new(s, 0.0), C64::new(h, 0.0), C64::new(0.0, h)]);
    let f = (mp / rate).sqrt();
    let (sn, cs) = (theta / 2.0).sin_cos();
    let mut m = CMat::zeros(3, 6);
    m[(0, 0)] = C64::new(f * cs, 0.0);
    m[(0, 1)] = C64::new(f * sn, 0.0);
    m[(1, 0)] = C64::new(-f * sn, 0.0);
    m[(1, 1)] = C64::new(f * cs, 0.0);
    let g = from_fock_form(&FockFormSpec { f: squeeze_fock_hamiltonian(chi), z: CMat::zeros(1, 2), m: CMat::zeros(1, 2) })?.g;
    SystemSpec::new(g, c, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_spec_is_valid() {
        let (g, eta) = (0.8f64, 0.3f64);
        let c = CMat::from_row_slice(1, 2, &[C64::new((g / 2.0).sqrt(), 0.0), C64::new(0.0, (g / 2.0).sqrt())]);
        let m = CMat::from_row_slice(1, 2, &[C64::new(eta.sqrt(), 0.0), C64::new(0.0, 0.0)]);
        let spec = SystemSpec::new(RMat::zeros(2, 2), c, m).unwrap();
        assert!((spec.efficiencies()[0] - eta).abs() < 1e-15);
        assert_eq!(spec.monitored(), vec![true, false]);
    }

    #[test]
    fn efficiency_above_one_rejected() {
        let c = CMat::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let m = CMat::from_row_slice(1, 2, &[C64::new(1.1, 0.0), C64::new(0.0, 0.0)]);
        let err = SystemSpec::new(RMat::zeros(2, 2), c, m).unwrap_err();
        assert_eq!(err.kind(), "MeasurementSettingInvalid");
    }

    #[test]
    fn asymmetric_g_rejected() {
        let g = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        let c = CMat::zeros(1, 2);
        let m = CMat::zeros(1, 2);
        assert_eq!(SystemSpec::new(g, c, m).unwrap_err().kind(), "NonSymmetricG");
    }

    #[test]
    fn harmonic_oscillator_fock_form() {
        let w = 1.7;
        let f = CMat::from_diagonal_element(2, 2, C64::new(w, 0.0));
        let spec = from_fock_form(&FockFormSpec { f, z: CMat::zeros(1, 2), m: CMat::zeros(1, 2) }).unwrap();
        assert!(max_abs_real(&(&spec.g - RMat::identity(2, 2) * w)) < 1e-14);
    }

    #[test]
    fn homodyne_builtin_shapes() {
        let s = builtin_homodyne_thermal(1.0, 0.0, 1.0).unwrap();
        let ff = to_fock_form(&s);
        assert!((ff.z[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(ff.z[(0, 1)].norm() < 1e-15 && ff.z[(1, 0)].norm() < 1e-15);
        assert_eq!(s.efficiencies(), vec![1.0, 0.0]);
        let s2 = builtin_homodyne_thermal(2.0, 1.0, 0.5).unwrap();
        let z2 = to_fock_form(&s2).z;
        let pre = (2.0f64 / 3.0).sqrt();
        assert!((z2[(0, 0)].re - 2.0 * pre).abs() < 1e-14);
        assert!((z2[(1, 1)].re - pre * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(builtin_homodyne_thermal(1.0, -1.0, 0.5).unwrap_err().kind(), "ParameterOutOfRange");
    }

    #[test]
    fn optomech_builtin() {
        let s = builtin_optomech_squeezing(1.0, 1.0, 0.1, 0.0, 0.5, 0.0).unwrap();
        let expect = RMat::from_row_slice(2, 2, &[0.0, -0.25, -0.25, 0.0]);
        assert!(max_abs_real(&(&s.g - expect)) < 1e-14);
        assert!((s.c[(0, 0)].re - 1.0).abs() < 1e-14);
        // theta = pi and theta = 0 share everything except the measurement rotation
        let a = builtin_optomech_squeezing(0.7, 0.8, 1.0, 0.2, 0.3, 0.0).unwrap();
        let b = builtin_optomech_squeezing(0.7, 0.8, 1.0, 0.2, 0.3, std::f64::consts::PI).unwrap();
        assert_eq!(a.g, b.g);
        assert!(max_abs(&(&a.c - &b.c)) == 0.0);
        assert!(max_abs(&(&a.m * a.m.adjoint() - &b.m * b.m.adjoint())) < 1e-14);
    }

    #[test]
    fn sigma_properties() {
        let s = symplectic_form(3);
        assert!(max_abs_real(&(s.transpose() + &s)) == 0.0);
        assert!(max_abs_real(&(&s * &s + RMat::identity(6, 6))) == 0.0);
    }
}
