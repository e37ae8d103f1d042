//! `lintraj` command line: validate specs, sample trajectory ensembles, compute
//! measurement effects, and run the Kalman and Fock-space cross-checks.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use config::{Config, Statistics};
use lintraj::adjoint_kalman::{crosscheck_against_povm, integrate_backward, kalman_matrices, BackwardScheme, GaussianMoments};
use lintraj::lie_rep::{povm_blocks, propagator_blocks, rep_of_generator, PovmBlocks, PropagatorBlocks};
use lintraj::linalg::{max_abs, CMat, CVec};
use lintraj::oracle_sme::{integrate_linear_sme_with, integrate_me, FockModel, IntegratorConfig, OracleScheme};
use lintraj::parameterization::{compute_generator, compute_noise_couplings, generator_by_operator_algebra};
use lintraj::povm::{effect_from_blocks, homodyne_closed_form, optomech_closed_form, retrodict_posterior, GaussianEffect, Prior};
use lintraj::state_engine::{
    apply_evolution, expectation, mode_annihilators, normalize_and_trace, purity, trace_distance, EvolutionFactors, FockDensityMatrix,
    StateExport, DEFAULT_TAIL_TOL,
};
use lintraj::system_model::SystemSpec;
use lintraj::trajectory::{
    accumulate_integrals, ostensible_from_rng, steps_for, stochastic_d, trajectory_rng, BlockTable, ConditionedSampler, IntegralsExport,
    MeasurementRecord, StatisticsMode,
};
use lintraj::{RMat, C64};
use output::{Cell, RunManifest, Sink, Versions};

#[derive(Parser)]
#[command(name = "lintraj", version, about = "Linear SME solver for bosonic modes under dyne measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system spec and report generator block residuals.
    Validate(Common),
    /// Sample records and evolve the initial state along each.
    Simulate(Common),
    /// Effect parameters of the compiled measurement for one record.
    Povm(Common),
    /// Backward Kalman effect for one record, cross-checked against the POVM.
    Adjoint(Common),
    /// Unconditioned master equation on the Fock truncation.
    Me(Common),
    /// Analytic state against the Fock-space oracles on one record.
    Compare(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    fock_dim: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also integrate every trajectory with the Fock-space oracle.
    #[arg(long)]
    compare_oracle: bool,
    #[arg(long, value_enum, default_value_t = SchemeArg::Milstein)]
    oracle_scheme: SchemeArg,
    /// `flat` or `gaussian:VAR` (isotropic prior around the initial mean).
    #[arg(long)]
    retrodict: Option<String>,
    /// Record CSV from `simulate`; without it a record is sampled from `--seed`.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Which trajectory of `--record` to use.
    #[arg(long, default_value_t = 0)]
    trajectory: u64,
    #[arg(long, value_enum)]
    statistics: Option<Statistics>,
    /// Only the first this-many trajectories are written to records.csv.
    #[arg(long, default_value_t = 100)]
    records_limit: usize,
    /// Only the first this-many final states are written under states/.
    #[arg(long, default_value_t = 16)]
    states_limit: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Em,
    Milstein,
}

impl From<SchemeArg> for OracleScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Em => OracleScheme::EulerMaruyama,
            SchemeArg::Milstein => OracleScheme::Milstein,
        }
    }
}

/// Config merged with command-line overrides.
struct Run {
    name: &'static str,
    args: Common,
    cfg: Config,
    spec: SystemSpec,
    dt: f64,
    t_final: f64,
    seed: u64,
    n_traj: usize,
    dim: usize,
    statistics: Statistics,
}

impl Run {
    fn new(name: &'static str, args: Common) -> Result<Self> {
        let cfg = config::load(&args.config)?;
        let spec = cfg.system.build()?;
        Ok(Run {
            name,
            dt: args.dt.or(cfg.dt).unwrap_or(1e-3),
            t_final: args.t_final.or(cfg.t_final).unwrap_or(1.0),
            seed: args.seed.or(cfg.seed).unwrap_or(0),
            n_traj: args.trajectories.or(cfg.trajectories).unwrap_or(1),
            dim: args.fock_dim.or(cfg.fock_dim).unwrap_or(20),
            statistics: args.statistics.unwrap_or(cfg.statistics),
            args,
            cfg,
            spec,
        })
    }

    fn sink(&self) -> Result<Sink> {
        let text = std::fs::read(&self.args.config)?;
        let manifest = RunManifest {
            config: self.args.config.display().to_string(),
            config_sha256: output::sha256_hex(&text),
            command: self.name.into(),
            seed: self.seed,
            dt: self.dt,
            t_final: self.t_final,
            n_trajectories: self.n_traj,
            fock_dim: self.dim,
            versions: Versions::current(),
        };
        Sink::new(&self.args.out, &manifest)
    }

    fn steps(&self) -> Result<usize> {
        Ok(steps_for(self.dt, self.t_final)?)
    }

    fn initial_state(&self) -> Result<FockDensityMatrix> {
        self.cfg.initial.build(self.spec.n_modes, self.dim)
    }

    fn gaussian_initial(&self) -> Result<GaussianMoments> {
        match self.cfg.initial.gaussian_mean(self.spec.n_modes) {
            Some(m) => Ok(GaussianMoments::coherent(&m)),
            None => Err(lintraj::Error::ParameterOutOfRange("conditioned sampling needs a vacuum or coherent initial state".into()).into()),
        }
    }

    /// The record for single-record commands: from `--record`, or sampled.
    fn one_record(&self) -> Result<MeasurementRecord> {
        match &self.args.record {
            Some(p) => read_record(p, self.args.trajectory, self.dt, 2 * self.spec.n_channels),
            None => {
                let steps = self.steps()?;
                match self.statistics {
                    Statistics::Ostensible => {
                        Ok(ostensible_from_rng(&self.spec.monitored(), self.dt, steps, self.seed, &mut trajectory_rng(self.seed, 0))?)
                    }
                    Statistics::Conditioned => Ok(ConditionedSampler::new(&self.spec, &self.gaussian_initial()?, self.dt, steps)?.sample(self.seed, 0)?),
                }
            }
        }
    }
}

/// Blocks shared by every trajectory of a run.
struct Shared {
    table: BlockTable,
    final_blocks: PropagatorBlocks,
    povm: PovmBlocks,
}

impl Shared {
    fn new(spec: &SystemSpec, dt: f64, steps: usize) -> Result<Self> {
        let g = compute_generator(spec);
        let table = BlockTable::new(&g, &compute_noise_couplings(spec), dt, steps)?;
        let final_blocks = propagator_blocks(&rep_of_generator(&g), dt * steps as f64)?;
        let povm = povm_blocks(&final_blocks)?;
        Ok(Shared { table, final_blocks, povm })
    }

    fn effect(&self, rec: &MeasurementRecord) -> Result<(lintraj::trajectory::TrajectoryIntegrals, CVec, GaussianEffect)> {
        let integrals = accumulate_integrals(&self.table, rec)?;
        let d = stochastic_d(&integrals, &self.povm);
        let effect = effect_from_blocks(&self.povm, &d)?;
        Ok((integrals, d, effect))
    }
}

fn read_record(path: &Path, trajectory: u64, dt: f64, width: usize) -> Result<MeasurementRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    let mut seed = 0;
    for rec in rd.records() {
        let rec = rec?;
        let idx: u64 = rec[0].parse()?;
        if idx != trajectory {
            continue;
        }
        seed = rec[1].parse()?;
        let ys: Vec<f64> = rec.iter().skip(4).map(str::parse).collect::<std::result::Result<_, _>>()?;
        if ys.len() != width {
            return Err(lintraj::Error::DimensionMismatch(format!("record has {} components, spec needs {width}", ys.len())).into());
        }
        rows.push(ys);
    }
    if rows.is_empty() {
        bail!("trajectory {trajectory} not found in {}", path.display());
    }
    let y = RMat::from_fn(rows.len(), width, |i, j| rows[i][j]);
    Ok(MeasurementRecord { dt, y, seed, mode: StatisticsMode::Ostensible })
}

fn cvec_json(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn rmat_json(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn cmd_validate(run: &Run) -> Result<()> {
    let g = compute_generator(&run.spec);
    let (g2, w2) = generator_by_operator_algebra(&run.spec);
    let w = compute_noise_couplings(&run.spec);
    let routes = [max_abs(&(&g.r - &g2.r)), max_abs(&(&g.d - &g2.d)), max_abs(&(&g.l - &g2.l)), max_abs(&(&w.w_l - &w2.w_l)), max_abs(&(&w.w_r - &w2.w_r))]
        .into_iter()
        .fold((g.scalar - g2.scalar).norm(), f64::max);
    let report = json!({
        "ok": true,
        "n_modes": run.spec.n_modes,
        "n_channels": run.spec.n_channels,
        "efficiencies": run.spec.efficiencies(),
        "monitored": run.spec.monitored(),
        "block_residual": g.block_residual(),
        "route_residual": routes,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryIntegralsOut {
    trajectory: u64,
    seed: u64,
    #[serde(flatten)]
    integrals: IntegralsExport,
}

struct TrajectoryOut {
    record: MeasurementRecord,
    integrals: IntegralsExport,
    log_weight: f64,
    trace: f64,
    amplitudes: Vec<C64>,
    numbers: Vec<f64>,
    state: FockDensityMatrix,
    oracle_distance: Option<f64>,
}

fn cmd_simulate(run: &Run) -> Result<()> {
    if run.args.record.is_some() {
        bail!("simulate samples its own records; --record is for povm, adjoint and compare");
    }
    let steps = run.steps()?;
    let shared = Shared::new(&run.spec, run.dt, steps)?;
    let rho0 = run.initial_state()?;
    let ann = mode_annihilators(run.spec.n_modes, run.dim);
    let nums: Vec<CMat> = ann.iter().map(|a| a.adjoint() * a).collect();
    let sampler = match run.statistics {
        Statistics::Conditioned => Some(ConditionedSampler::new(&run.spec, &run.gaussian_initial()?, run.dt, steps)?),
        Statistics::Ostensible => None,
    };
    let model = run.args.compare_oracle.then(|| FockModel::new(&run.spec, run.dim));
    let monitored = run.spec.monitored();
    let one = |i: u64| -> Result<TrajectoryOut> {
        let record = match &sampler {
            Some(s) => s.sample(run.seed, i)?,
            None => ostensible_from_rng(&monitored, run.dt, steps, run.seed, &mut trajectory_rng(run.seed, i))?,
        };
        let (integrals, d, _) = shared.effect(&record)?;
        let f = EvolutionFactors::new(&shared.final_blocks, &integrals)?;
        let rho = apply_evolution(&rho0, &f, DEFAULT_TAIL_TOL)?;
        let (state, tr) = normalize_and_trace(&rho)?;
        let amplitudes = ann.iter().map(|a| expectation(&state, a)).collect::<lintraj::Result<Vec<_>>>()?;
        let numbers = nums.iter().map(|n| expectation(&state, n).map(|z| z.re)).collect::<lintraj::Result<Vec<_>>>()?;
        let oracle_distance = match &model {
            Some(m) => {
                let o = integrate_linear_sme_with(m, &rho0, &record, DEFAULT_TAIL_TOL, run.args.oracle_scheme.into())?;
                Some(trace_distance(&state.rho, &normalize_and_trace(&o)?.0.rho))
            }
            None => None,
        };
        let lw = f.log_weight.re;
        Ok(TrajectoryOut {
            integrals: IntegralsExport::new(&integrals, &d),
            record,
            log_weight: lw,
            trace: tr * lw.exp(),
            amplitudes,
            numbers,
            state,
            oracle_distance,
        })
    };
    let outs: Vec<TrajectoryOut> = (0..run.n_traj as u64)
        .into_par_iter()
        .map(|i| one(i).with_context(|| format!("trajectory {i}")))
        .collect::<Result<_>>()?;

    let sink = run.sink()?;
    let width = 2 * run.spec.n_channels;
    let mut header: Vec<String> = ["trajectory", "seed", "step", "t"].map(String::from).to_vec();
    header.extend((0..width).map(|k| format!("y{k}")));
    let mut rows = Vec::new();
    for (i, o) in outs.iter().enumerate().take(run.args.records_limit) {
        for j in 0..o.record.steps() {
            let mut r = vec![Cell::Int(i as u64), Cell::Int(o.record.seed), Cell::Int(j as u64), Cell::Float(j as f64 * run.dt)];
            r.extend((0..width).map(|k| Cell::Float(o.record.y[(j, k)])));
            rows.push(r);
        }
    }
    sink.csv("records.csv", &header, &rows)?;

    let integrals: Vec<TrajectoryIntegralsOut> =
        outs.iter().enumerate().map(|(i, o)| TrajectoryIntegralsOut { trajectory: i as u64, seed: run.seed, integrals: o.integrals.clone() }).collect();
    sink.json("integrals.json", &json!({ "trajectories": integrals }))?;

    let mut header: Vec<String> = ["trajectory", "log_weight", "weight"].map(String::from).to_vec();
    for k in 0..run.spec.n_modes {
        header.extend([format!("re_a{k}"), format!("im_a{k}"), format!("n{k}")]);
    }
    if run.args.compare_oracle {
        header.push("oracle_trace_distance".into());
    }
    let rows: Vec<Vec<Cell>> = outs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut r = vec![Cell::Int(i as u64), Cell::Float(o.log_weight), Cell::Float(o.trace)];
            for (a, n) in o.amplitudes.iter().zip(&o.numbers) {
                r.extend([Cell::Float(a.re), Cell::Float(a.im), Cell::Float(*n)]);
            }
            r.extend(o.oracle_distance.map(Cell::Float));
            r
        })
        .collect();
    sink.csv("moments.csv", &header, &rows)?;

    for (i, o) in outs.iter().enumerate().take(run.args.states_limit) {
        sink.json(&format!("states/trajectory_{i:06}.json"), &StateExport::new(&o.state))?;
    }

    // ostensible records need the trace weight to average; conditioned ones do not
    let weighted = run.statistics == Statistics::Ostensible;
    let n = outs.len() as f64;
    let stat = |xs: Vec<f64>| {
        let m = xs.iter().sum::<f64>() / n;
        let se = if n > 1.0 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { f64::NAN };
        json!({ "mean": m, "standard_error": se })
    };
    let per_mode: Vec<_> = (0..run.spec.n_modes)
        .map(|k| stat(outs.iter().map(|o| if weighted { o.trace * o.numbers[k] } else { o.numbers[k] }).collect()))
        .collect();
    let mut summary = json!({
        "statistics": run.statistics,
        "trajectories": outs.len(),
        "number": per_mode,
        "weight": stat(outs.iter().map(|o| o.trace).collect()),
    });
    if run.args.compare_oracle {
        let worst = outs.iter().filter_map(|o| o.oracle_distance).fold(0.0, f64::max);
        summary["oracle_max_trace_distance"] = json!(worst);
    }
    sink.json("summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&json!({ "out": run.args.out, "manifest_sha256": sink.hash(), "summary": summary }))?);
    Ok(())
}

fn parse_prior(s: &str, mean: Option<CVec>, n_modes: usize) -> Result<Prior> {
    if s == "flat" {
        return Ok(Prior::Flat);
    }
    if let Some(v) = s.strip_prefix("gaussian:") {
        let var: f64 = v.parse().context("gaussian prior variance")?;
        let mean = mean.unwrap_or_else(|| CVec::zeros(n_modes));
        return Ok(Prior::Gaussian { mean, cov: RMat::identity(2 * n_modes, 2 * n_modes) * var });
    }
    bail!("--retrodict takes `flat` or `gaussian:VAR`, got `{s}`")
}

fn cmd_povm(run: &Run) -> Result<()> {
    let rec = run.one_record()?;
    let shared = Shared::new(&run.spec, rec.dt, rec.steps())?;
    let (_, _, effect) = shared.effect(&rec)?;
    let mut report = json!({
        "t_final": rec.t_final(),
        "effect": effect.export(),
        "information_matrix": rmat_json(&effect.t_map),
        "rank": effect.rank,
    });
    match run.cfg.system {
        config::SystemConfig::Homodyne { gamma, k, eta } => {
            let cf = homodyne_closed_form(gamma, k, eta, &rec);
            let res = (effect.lpp[(0, 0)] - cf.lpp).norm().max((effect.lpp_breve[(0, 0)] - cf.lpp_breve).norm()).max((effect.d[0] - cf.d).norm());
            report["closed_form"] = json!(cf);
            report["closed_form_residual"] = json!(res);
        }
        config::SystemConfig::Optomech { mu, eta, gamma, k_th, chi, .. } => {
            let cf = optomech_closed_form(mu * eta, gamma, k_th + mu * (1.0 - eta) / gamma, chi, Some(rec.t_final()))?;
            report["closed_form"] = json!(cf);
        }
        _ => {}
    }
    if !effect.is_flat {
        // variances of √2 Re α and √2 Im α per mode under a flat prior
        let flat = retrodict_posterior(&effect, &Prior::Flat)?;
        let var: Vec<f64> = (0..2 * run.spec.n_modes).map(|i| 2.0 * flat.cov[(i, i)]).collect();
        report["quadrature_variances"] = json!(var);
    }
    if let Some(p) = &run.args.retrodict {
        let prior = parse_prior(p, run.cfg.initial.gaussian_mean(run.spec.n_modes), run.spec.n_modes)?;
        let post = retrodict_posterior(&effect, &prior)?;
        report["posterior"] = json!({
            "mean": cvec_json(&post.mean),
            "cov": rmat_json(&post.cov),
            "uninformative_directions": post.uninformative.iter().map(|v| v.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
    }
    let sink = run.sink()?;
    sink.json("povm.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_adjoint(run: &Run) -> Result<()> {
    let rec = run.one_record()?;
    let (adj, path) = integrate_backward(&kalman_matrices(&run.spec), &rec, BackwardScheme::default(), true)?;
    let shared = Shared::new(&run.spec, rec.dt, rec.steps())?;
    let (_, _, effect) = shared.effect(&rec)?;
    let sink = run.sink()?;
    let nq = 2 * run.spec.n_modes;
    let mut header = vec!["tau".to_string()];
    header.extend((0..nq).map(|i| format!("x{i}")));
    header.extend((0..nq).flat_map(|i| (0..nq).map(move |j| format!("v{i}{j}"))));
    let rows: Vec<Vec<Cell>> = path
        .iter()
        .map(|m| {
            let mut r = vec![Cell::Float(m.tau)];
            r.extend(m.x.iter().map(|&v| Cell::Float(v)));
            r.extend((0..nq).flat_map(|i| (0..nq).map(move |j| (i, j))).map(|(i, j)| Cell::Float(m.v[(i, j)])));
            r
        })
        .collect();
    sink.csv("moments.csv", &header, &rows)?;
    let check = crosscheck_against_povm(&adj, &effect, 1e-6);
    let mut report = json!({
        "t_final": rec.t_final(),
        "x": adj.x.iter().copied().collect::<Vec<_>>(),
        "v": rmat_json(&adj.v),
        "variances": adj.variances(),
        "max_deviation": check.as_ref().ok(),
        "passed": check.is_ok(),
    });
    if let config::SystemConfig::Homodyne { gamma, k, eta } = run.cfg.system {
        let t = rec.t_final();
        let vxx = 0.5 * (1.0 + 2.0 * k) * (1.0 / (eta * (1.0 - (-gamma * t).exp())) - 1.0);
        report["closed_form_vxx"] = json!(vxx);
        report["vxx_residual"] = json!((adj.v[(0, 0)] - vxx).abs());
    }
    sink.json("crosscheck.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    check?;
    Ok(())
}

fn cmd_me(run: &Run) -> Result<()> {
    let rho0 = run.initial_state()?;
    let cfg = IntegratorConfig { seed: run.seed, ..IntegratorConfig::new(run.dt, run.t_final, run.dim) };
    let rho = integrate_me(&run.spec, &rho0, &cfg)?;
    let ann = mode_annihilators(run.spec.n_modes, run.dim);
    let amps = ann.iter().map(|a| expectation(&rho, a)).collect::<lintraj::Result<Vec<_>>>()?;
    let nums = ann.iter().map(|a| expectation(&rho, &(a.adjoint() * a)).map(|z| z.re)).collect::<lintraj::Result<Vec<_>>>()?;
    let sink = run.sink()?;
    sink.json("states/me_final.json", &StateExport::new(&rho))?;
    let report = json!({
        "t_final": run.t_final,
        "amplitude": amps.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "number": nums,
        "trace": rho.trace().re,
        "purity": purity(&rho.rho),
        "tail_mass": rho.tail_mass(),
    });
    sink.json("me.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_compare(run: &Run) -> Result<()> {
    let rec = run.one_record()?;
    let rho0 = run.initial_state()?;
    let shared = Shared::new(&run.spec, rec.dt, rec.steps())?;
    let (integrals, _, _) = shared.effect(&rec)?;
    let f = EvolutionFactors::new(&shared.final_blocks, &integrals)?;
    let (analytic, tr) = normalize_and_trace(&apply_evolution(&rho0, &f, DEFAULT_TAIL_TOL)?)?;
    let model = FockModel::new(&run.spec, run.dim);
    let mut schemes = serde_json::Map::new();
    for (name, scheme) in [("euler_maruyama", OracleScheme::EulerMaruyama), ("milstein", OracleScheme::Milstein)] {
        let o = integrate_linear_sme_with(&model, &rho0, &rec, DEFAULT_TAIL_TOL, scheme)?;
        let (on, otr) = normalize_and_trace(&o)?;
        schemes.insert(
            name.into(),
            json!({ "trace_distance": trace_distance(&analytic.rho, &on.rho), "trace_ratio": tr * f.log_weight.re.exp() / otr }),
        );
    }
    let report = json!({ "t_final": rec.t_final(), "dt": rec.dt, "fock_dim": run.dim, "oracles": schemes });
    let sink = run.sink()?;
    sink.json("compare.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let (name, args) = match cli.command {
        Command::Validate(a) => ("validate", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Povm(a) => ("povm", a),
        Command::Adjoint(a) => ("adjoint", a),
        Command::Me(a) => ("me", a),
        Command::Compare(a) => ("compare", a),
    };
    let run = Run::new(name, args)?;
    match name {
        "validate" => cmd_validate(&run),
        "simulate" => cmd_simulate(&run),
        "povm" => cmd_povm(&run),
        "adjoint" => cmd_adjoint(&run),
        "me" => cmd_me(&run),
        _ => cmd_compare(&run),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(core) = e.downcast_ref::<lintraj::Error>() {
        return core.kind();
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return "ConfigError";
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "IoError";
    }
    "Error"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LINTRAJ_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = json!({ "error": error_kind(&e), "message": format!("{e:#}") });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
