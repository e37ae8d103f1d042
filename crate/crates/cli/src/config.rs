use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lintraj::linalg::{CMat, CVec};
use lintraj::state_engine::FockDensityMatrix;
use lintraj::system_model::{builtin_homodyne_thermal, builtin_optomech_squeezing, from_fock_form, FockFormSpec, SystemSpec};
use lintraj::{RMat, C64};
use serde::{Deserialize, Serialize};

/// Complex entries are written `[re, im]`.
pub type JsonMat = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Homodyne {
        gamma: f64,
        #[serde(default)]
        k: f64,
        #[serde(default = "one")]
        eta: f64,
    },
    Optomech {
        mu: f64,
        eta: f64,
        gamma: f64,
        #[serde(default)]
        k_th: f64,
        #[serde(default)]
        chi: f64,
        #[serde(default)]
        theta: f64,
    },
    /// Quadrature form: real symmetric `g`, complex `c` (L x 2N) and `m` (L x 2L).
    Explicit { g: Vec<Vec<f64>>, c: JsonMat, m: JsonMat },
    /// Ladder-operator form `{F, Z, M}`.
    FockForm { f: JsonMat, z: JsonMat, m: JsonMat },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Vacuum,
    Coherent { alpha: Vec<[f64; 2]> },
    Fock { n: Vec<usize> },
    /// Density matrix in a JSON file with the state-export layout.
    Matrix { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    #[default]
    Ostensible,
    Conditioned,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialConfig,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trajectories: Option<usize>,
    #[serde(default)]
    pub fock_dim: Option<usize>,
    #[serde(default)]
    pub statistics: Statistics,
}

fn default_initial() -> InitialConfig {
    InitialConfig::Vacuum
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn cmat(rows: &JsonMat, what: &str) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        bail!("{what}: ragged matrix");
    }
    Ok(CMat::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl SystemConfig {
    pub fn build(&self) -> lintraj::Result<SystemSpec> {
        let bad = |e: anyhow::Error| lintraj::Error::DimensionMismatch(e.to_string());
        match self {
            SystemConfig::Homodyne { gamma, k, eta } => builtin_homodyne_thermal(*gamma, *k, *eta),
            SystemConfig::Optomech { mu, eta, gamma, k_th, chi, theta } => builtin_optomech_squeezing(*mu, *eta, *gamma, *k_th, *chi, *theta),
            SystemConfig::Explicit { g, c, m } => {
                let n = g.len();
                if g.iter().any(|r| r.len() != n) {
                    return Err(lintraj::Error::DimensionMismatch("g must be square".into()));
                }
                let g = RMat::from_fn(n, n, |i, j| g[i][j]);
                SystemSpec::new(g, cmat(c, "c").map_err(bad)?, cmat(m, "m").map_err(bad)?)
            }
            SystemConfig::FockForm { f, z, m } => from_fock_form(&FockFormSpec {
                f: cmat(f, "f").map_err(bad)?,
                z: cmat(z, "z").map_err(bad)?,
                m: cmat(m, "m").map_err(bad)?,
            }),
        }
    }
}

impl InitialConfig {
    pub fn build(&self, n_modes: usize, dim: usize) -> Result<FockDensityMatrix> {
        let state = match self {
            InitialConfig::Vacuum => FockDensityMatrix::vacuum(n_modes, dim),
            InitialConfig::Coherent { alpha } => {
                check_len(alpha.len(), n_modes)?;
                FockDensityMatrix::coherent(&alpha.iter().map(|a| C64::new(a[0], a[1])).collect::<Vec<_>>(), dim)?
            }
            InitialConfig::Fock { n } => {
                check_len(n.len(), n_modes)?;
                FockDensityMatrix::fock(n, dim)?
            }
            InitialConfig::Matrix { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let s: lintraj::state_engine::StateExport = serde_json::from_str(&text)?;
                if s.n_modes != n_modes || s.dim != dim {
                    return Err(lintraj::Error::DimensionMismatch(format!(
                        "state file has {} modes at D={}, run uses {n_modes} at D={dim}",
                        s.n_modes, s.dim
                    ))
                    .into());
                }
                let total = dim.pow(n_modes as u32);
                let rho = CMat::from_fn(total, total, |i, j| C64::new(s.rho_re[i * total + j], s.rho_im[i * total + j]));
                FockDensityMatrix::from_matrix(n_modes, dim, rho)?
            }
        };
        Ok(state)
    }

    /// Mean amplitudes when the state is Gaussian (vacuum or coherent).
    pub fn gaussian_mean(&self, n_modes: usize) -> Option<CVec> {
        match self {
            InitialConfig::Vacuum => Some(CVec::zeros(n_modes)),
            InitialConfig::Coherent { alpha } => Some(CVec::from_iterator(alpha.len(), alpha.iter().map(|a| C64::new(a[0], a[1])))),
            _ => None,
        }
    }
}

fn check_len(got: usize, n_modes: usize) -> Result<()> {
    if got != n_modes {
        return Err(lintraj::Error::DimensionMismatch(format!("initial state lists {got} modes, system has {n_modes}")).into());
    }
    Ok(())
}
