//! Experiment configuration: a flat TOML file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use eigenlab_core::integrators::default_epsilon;
use eigenlab_core::stationary::MhConfig;
use eigenlab_core::{ModelParams, Scheme, SimConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Regime,
    PhaseDiagram,
    Verify,
    StationaryCompare,
    LaplaceCheck,
    CollisionScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Regime => "regime",
            Command::PhaseDiagram => "phase-diagram",
            Command::Verify => "verify",
            Command::StationaryCompare => "stationary-compare",
            Command::LaplaceCheck => "laplace-check",
            Command::CollisionScan => "collision-scan",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keys accepted in a configuration file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<usize>,
    pub scheme: Option<String>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub epsilon: Option<f64>,
    pub collision_tol: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub record_stride: Option<usize>,
    pub lambda0: Option<Vec<f64>>,
    pub noise_refine: Option<u32>,
    pub out: Option<PathBuf>,
    pub sweep: Option<String>,
    pub mh_burn_in: Option<usize>,
    pub mh_samples: Option<usize>,
    pub mh_thin: Option<usize>,
    pub laplace_mu: Option<Vec<f64>>,
    pub laplace_t: Option<Vec<f64>>,
    pub laplace_h: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("config: cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }
}

/// Flags shared by every command; each overrides the matching file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub paths: Option<usize>,
    #[arg(long, global = true, value_name = "REAL")]
    pub dt: Option<f64>,
    #[arg(long, global = true, value_name = "REAL")]
    pub horizon: Option<f64>,
    #[arg(long, global = true, value_name = "REAL")]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, value_name = "NAME")]
    pub scheme: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Grid such as `alpha=0.4,0.7;beta=0.5;gamma=0`.
    #[arg(long, global = true, value_name = "SPEC", allow_hyphen_values = true)]
    pub sweep: Option<String>,
}

/// Grid over `(alpha, beta, gamma)`; an axis left out keeps the base value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Sweep {
    pub fn parse(spec: &str, base: &ModelParams) -> Result<Self, CliError> {
        let mut sweep = Sweep {
            alpha: vec![base.alpha],
            beta: vec![base.beta],
            gamma: vec![base.gamma],
        };
        for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, values) = part.split_once('=').ok_or_else(|| {
                CliError::Config(format!("sweep: expected key=v1,v2 in {part:?}"))
            })?;
            let values = values
                .split(',')
                .map(|v| {
                    f64::from_str(v.trim())
                        .map_err(|_| CliError::Config(format!("sweep: bad number {v:?} for {key}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(CliError::Config(format!("sweep: empty grid for {key}")));
            }
            match key.trim() {
                "alpha" => sweep.alpha = values,
                "beta" => sweep.beta = values,
                "gamma" => sweep.gamma = values,
                other => return Err(CliError::Config(format!("sweep: unknown axis {other:?}"))),
            }
        }
        Ok(sweep)
    }

    /// Grid points in `alpha`-major order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &a in &self.alpha {
            for &b in &self.beta {
                for &g in &self.gamma {
                    out.push((a, b, g));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LaplaceGrid {
    pub mu: Vec<f64>,
    pub t: Vec<f64>,
    /// Exact-subsampling step for the time integral.
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub params: ModelParams,
    pub config: SimConfig,
    pub sweep: Option<Sweep>,
    pub out_dir: PathBuf,
    pub mh: MhConfig,
    pub laplace: LaplaceGrid,
}

impl ExperimentSpec {
    /// Merge file keys and flags over the defaults and validate the result.
    pub fn build(command: Command, file: FileConfig, flags: &Overrides) -> Result<Self, CliError> {
        let pick =
            |flag: Option<f64>, key: Option<f64>, default: f64| flag.or(key).unwrap_or(default);
        let n = flags.n.or(file.n).unwrap_or(3);
        let params = ModelParams {
            alpha: pick(flags.alpha, file.alpha, 2.0),
            beta: pick(flags.beta, file.beta, 0.5),
            gamma: pick(flags.gamma, file.gamma, 1.0),
            n,
        };
        params.validate().map_err(CliError::from_core)?;

        let mut config = SimConfig::new(n);
        if let Some(s) = flags.scheme.as_ref().or(file.scheme.as_ref()) {
            config.scheme = Scheme::from_str(s).map_err(CliError::from_core)?;
        }
        config.dt = pick(flags.dt, file.dt, config.dt);
        config.horizon = pick(flags.horizon, file.horizon, config.horizon);
        config.epsilon = flags
            .epsilon
            .or(file.epsilon)
            .unwrap_or_else(|| default_epsilon(config.dt));
        config.collision_tol = file.collision_tol.unwrap_or(config.collision_tol);
        config.seed = flags.seed.or(file.seed).unwrap_or(config.seed);
        config.paths = flags.paths.or(file.paths).unwrap_or(config.paths);
        config.record_stride = file.record_stride.unwrap_or(config.record_stride);
        config.noise_refine = file.noise_refine.unwrap_or(config.noise_refine);
        if let Some(l) = file.lambda0 {
            config.lambda0 = l;
        }
        if config.lambda0.len() != n {
            return Err(CliError::Config(format!(
                "lambda0: expected {n} values, got {}",
                config.lambda0.len()
            )));
        }
        config.validate().map_err(CliError::from_core)?;

        let sweep = match flags.sweep.as_ref().or(file.sweep.as_ref()) {
            Some(s) => Some(Sweep::parse(s, &params)?),
            None => None,
        };
        let mut mh = MhConfig::default();
        mh.burn_in = file.mh_burn_in.unwrap_or(mh.burn_in);
        mh.samples = file.mh_samples.unwrap_or(mh.samples);
        mh.thin = file.mh_thin.unwrap_or(mh.thin);
        let laplace = LaplaceGrid {
            mu: file.laplace_mu.unwrap_or_else(|| vec![0.5, 1.0]),
            t: file.laplace_t.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
            h: file.laplace_h.unwrap_or(5e-3),
        };
        if laplace.mu.is_empty() || laplace.mu.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(CliError::Config(
                "laplace_mu: need a nonempty list of values >= 0".into(),
            ));
        }
        if laplace.t.is_empty() || laplace.t.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(CliError::Config(
                "laplace_t: need a nonempty list of values > 0".into(),
            ));
        }
        if !(laplace.h > 0.0) || !laplace.h.is_finite() {
            return Err(CliError::Config(format!(
                "laplace_h: must be > 0, got {}",
                laplace.h
            )));
        }
        let out_dir = flags
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            command,
            params,
            config,
            sweep,
            out_dir,
            mh,
            laplace,
        })
    }

    /// One-line record of every setting, defaults included.
    pub fn describe(&self) -> String {
        let p = &self.params;
        let c = &self.config;
        let lambda0: Vec<String> = c.lambda0.iter().map(|v| v.to_string()).collect();
        let mut s = format!(
            "eigenlab {} command={} alpha={} beta={} gamma={} n={} scheme={} dt={} horizon={} \
             epsilon={} collision_tol={} seed={} paths={} record_stride={} noise_refine={} lambda0={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            p.alpha,
            p.beta,
            p.gamma,
            p.n,
            c.scheme,
            c.dt,
            c.horizon,
            c.epsilon,
            c.collision_tol,
            c.seed,
            c.paths,
            c.record_stride,
            c.noise_refine,
            lambda0.join(";"),
        );
        match self.command {
            Command::StationaryCompare => {
                s += &format!(
                    " mh_burn_in={} mh_samples={} mh_thin={}",
                    self.mh.burn_in, self.mh.samples, self.mh.thin
                )
            }
            Command::LaplaceCheck => {
                let join = |v: &[f64]| {
                    v.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                };
                s += &format!(
                    " laplace_mu={} laplace_t={} laplace_h={}",
                    join(&self.laplace.mu),
                    join(&self.laplace.t),
                    self.laplace.h
                );
            }
            _ => {}
        }
        if let Some(sw) = &self.sweep {
            let join = |v: &[f64]| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            s += &format!(
                " sweep=alpha={};beta={};gamma={}",
                join(&sw.alpha),
                join(&sw.beta),
                join(&sw.gamma)
            );
        }
        s
    }
}
