//! Detection settings from flags and an optional `key=value` file.
//!
//! File keys are the long flag names (`budget = 20`, `key-column = ip`);
//! underscores are accepted in place of dashes. A flag given on the command
//! line always wins over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use streamcpd::{
    AutotuneConfig, CusumConfig, CusumState, DetectorConfig, EwmaConfig, EwmaState, InputTransform,
    MvNormalGammaParams, NormalGammaParams, PriorSpec, UnivariateDetector,
};

use crate::input::Format;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Bocpd,
    Cusum,
    Ewma,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectArgs {
    /// `key=value` settings file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input file; `-` or omitted reads stdin.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Input format. Defaults from the extension (.ndjson/.jsonl), else CSV.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Expected run length between changes (hazard 1/lambda).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Maximum number of run-length hypotheses kept.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Points consumed to tune the prior.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Estimate beta0 and mu0 from the warmup points (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub autotune: Option<bool>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Observations a new run must survive before it is reported.
    #[arg(long)]
    pub confirmation: Option<u64>,
    /// Require the new run to out-explain the current regime model.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub evidence_check: Option<bool>,
    #[arg(long)]
    pub transform: Option<InputTransform>,
    /// Column (CSV) or field (NDJSON) holding the stream key.
    #[arg(long)]
    pub key_column: Option<String>,
    /// Value columns, comma separated. Defaults to every non-key column.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Burn-in length for the CUSUM and EWMA baselines.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// NDJSON event output; stdout when omitted.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// JSON run summary; stderr when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Per-point CSV of key, t, map_run_length, map_posterior, marginal_predictive.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// True changepoint indices, one per line; adds the loss to the summary.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Charge every prediction, not just unmatched ones, when scoring against --truth.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub penalty_literal: Option<bool>,
    /// Worker threads; keys are sharded across them.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory of per-key snapshots to resume from.
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    /// Directory to write per-key snapshots to at end of input.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
}

/// Fully resolved detection settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: Format,
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub budget: usize,
    pub warmup: usize,
    pub autotune: bool,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub mu: f64,
    pub confirmation: u64,
    pub evidence_check: bool,
    pub transform: InputTransform,
    pub key_column: Option<String>,
    pub columns: Option<Vec<String>>,
    pub burn_in: usize,
    pub events: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub penalty_literal: bool,
    pub workers: usize,
    pub snapshot_in: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
}

/// Parses a `key=value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "config line {}: expected key=value, got {line:?}",
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(format!(
                "config line {}: duplicate key {key:?}",
                i + 1
            )));
        }
    }
    Ok(out)
}

struct Layered {
    file: BTreeMap<String, String>,
}

impl Layered {
    fn pick<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let from_file = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::config(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    fn path(&mut self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        let from_file = self.file.remove(key).map(PathBuf::from);
        flag.or(from_file)
    }
}

impl RunConfig {
    pub fn resolve(args: DetectArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", p.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut l = Layered { file };
        let fixed = NormalGammaParams::fixed_default();
        let auto = AutotuneConfig::default();

        let input = l.path(args.input, "input").filter(|p| p != Path::new("-"));
        let format = match l.pick(args.format, "format")? {
            Some(f) => f,
            None => input.as_deref().map(Format::from_path).unwrap_or(Format::Csv),
        };
        let columns = match args.columns {
            Some(c) => Some(c),
            None => l
                .file
                .remove("columns")
                .map(|v| v.split(',').map(|s| s.trim().to_string()).collect()),
        };
        let cfg = Self {
            input,
            format,
            algorithm: l.pick(args.algorithm, "algorithm")?.unwrap_or(Algorithm::Bocpd),
            lambda: l
                .pick(args.lambda, "lambda")?
                .unwrap_or(DetectorConfig::<NormalGammaParams>::DEFAULT_LAMBDA),
            budget: l
                .pick(args.budget, "budget")?
                .unwrap_or(DetectorConfig::<NormalGammaParams>::DEFAULT_BUDGET),
            warmup: l.pick(args.warmup, "warmup")?.unwrap_or(auto.warmup_size),
            autotune: l.pick(args.autotune, "autotune")?.unwrap_or(true),
            alpha: l.pick(args.alpha, "alpha")?.unwrap_or(fixed.alpha),
            beta: l.pick(args.beta, "beta")?.unwrap_or(fixed.beta),
            kappa: l.pick(args.kappa, "kappa")?.unwrap_or(fixed.kappa),
            mu: l.pick(args.mu, "mu")?.unwrap_or(fixed.mu),
            confirmation: l
                .pick(args.confirmation, "confirmation")?
                .unwrap_or(DetectorConfig::<NormalGammaParams>::DEFAULT_CONFIRMATION),
            evidence_check: l.pick(args.evidence_check, "evidence-check")?.unwrap_or(true),
            transform: l.pick(args.transform, "transform")?.unwrap_or_default(),
            key_column: l.pick(args.key_column, "key-column")?,
            columns,
            burn_in: l
                .pick(args.burn_in, "burn-in")?
                .unwrap_or(CusumConfig::default().burn_in),
            events: l.path(args.events, "events"),
            summary: l.path(args.summary, "summary"),
            plot_data: l.path(args.plot_data, "plot-data"),
            truth: l.path(args.truth, "truth"),
            penalty_literal: l.pick(args.penalty_literal, "penalty-literal")?.unwrap_or(false),
            workers: l.pick(args.workers, "workers")?.unwrap_or_else(default_workers),
            snapshot_in: l.path(args.snapshot_in, "snapshot-in"),
            snapshot_out: l.path(args.snapshot_out, "snapshot-out"),
        };
        if let Some(key) = l.file.keys().next() {
            return Err(CliError::config(format!("unknown config key {key:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        if matches!(self.columns.as_deref(), Some([])) {
            return Err(CliError::config("columns must name at least one column"));
        }
        match self.algorithm {
            Algorithm::Bocpd => {
                UnivariateDetector::new(self.univariate(), 1)?;
            }
            Algorithm::Cusum => {
                CusumState::new(self.cusum())?;
            }
            Algorithm::Ewma => {
                EwmaState::new(self.ewma())?;
            }
        }
        if self.plot_data.is_some() && self.algorithm != Algorithm::Bocpd {
            return Err(CliError::config(
                "--plot-data is only available for the bocpd algorithm",
            ));
        }
        Ok(())
    }

    fn base<M>(&self, prior: PriorSpec<M>) -> DetectorConfig<M> {
        DetectorConfig::autotuned()
            .with_lambda(self.lambda)
            .with_budget(self.budget)
            .with_confirmation(self.confirmation)
            .with_evidence_check(self.evidence_check)
            .with_prior(prior)
    }

    fn autotune_config(&self) -> AutotuneConfig {
        AutotuneConfig {
            warmup_size: self.warmup,
            alpha0: self.alpha,
            kappa0: self.kappa,
            ..AutotuneConfig::default()
        }
    }

    /// Detector settings for scalar streams. Invalid hyperparameters surface
    /// when the detector is built.
    pub fn univariate(&self) -> DetectorConfig<NormalGammaParams> {
        let prior = if self.autotune {
            PriorSpec::Autotune(self.autotune_config())
        } else {
            PriorSpec::Fixed(NormalGammaParams {
                alpha: self.alpha,
                beta: self.beta,
                kappa: self.kappa,
                mu: self.mu,
            })
        };
        self.base(prior)
    }

    pub fn multivariate(&self, dim: usize) -> Result<DetectorConfig<MvNormalGammaParams>> {
        let prior = if self.autotune {
            PriorSpec::Autotune(self.autotune_config())
        } else {
            PriorSpec::Fixed(MvNormalGammaParams::fixed(
                dim, self.alpha, self.beta, self.kappa, self.mu,
            )?)
        };
        Ok(self.base(prior))
    }

    pub fn cusum(&self) -> CusumConfig {
        CusumConfig {
            burn_in: self.burn_in,
            ..CusumConfig::default()
        }
    }

    pub fn ewma(&self) -> EwmaConfig {
        EwmaConfig {
            burn_in: self.burn_in,
            ..EwmaConfig::default()
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().min(4))
}
