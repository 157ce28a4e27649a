//! `gen`: seeded synthetic streams with a truth sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use streamcpd::datagen::{flat, mv_drift, nongaussian, normal_switch, normal_uniform, DriftKind, NonGaussianKind};
use streamcpd::{inject_outliers, StreamWithTruth};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    NormalSwitch,
    NormalUniform,
    Poisson,
    Gamma,
    Lognormal,
    MixedGaussian,
    MeanDrift,
    VarDrift,
    CovDrift,
    /// Single normal regime, no changepoints.
    Flat,
}

impl Kind {
    /// The name used on the command line.
    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }

    pub fn default_len(self) -> usize {
        match self {
            Self::NormalSwitch | Self::NormalUniform => 100_000,
            Self::MeanDrift | Self::VarDrift | Self::CovDrift => 2_000,
            _ => 10_000,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Stream length; defaults per kind (100000, 10000, or 2000 for drift).
    #[arg(long)]
    pub n: Option<usize>,
    /// Regime length for normal-switch and normal-uniform.
    #[arg(long, default_value_t = 10_000)]
    pub period: usize,
    /// Number of changepoints for the non-Gaussian kinds.
    #[arg(long, default_value_t = 10)]
    pub changepoints: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fraction of points replaced by outliers.
    #[arg(long, default_value_t = 0.0)]
    pub outliers: f64,
    /// Outlier distance from the segment mean, in segment standard deviations.
    #[arg(long, default_value_t = 8.0)]
    pub outlier_sigmas: f64,
    /// Mean and standard deviation for `flat`.
    #[arg(long, default_value_t = 1e4)]
    pub mean: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sd: f64,
    /// Output CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Truth sidecar; defaults to `<out>.truth`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

pub struct GenParams {
    pub kind: Kind,
    pub n: usize,
    pub period: usize,
    pub changepoints: usize,
    pub seed: u64,
    pub outliers: f64,
    pub outlier_sigmas: f64,
    pub mean: f64,
    pub sd: f64,
}

impl From<&GenArgs> for GenParams {
    fn from(a: &GenArgs) -> Self {
        Self {
            kind: a.kind,
            n: a.n.unwrap_or(a.kind.default_len()),
            period: a.period,
            changepoints: a.changepoints,
            seed: a.seed,
            outliers: a.outliers,
            outlier_sigmas: a.outlier_sigmas,
            mean: a.mean,
            sd: a.sd,
        }
    }
}

pub fn build(p: &GenParams) -> Result<StreamWithTruth> {
    let ng = |k| nongaussian(k, p.n, p.changepoints, p.seed);
    let drift = |k| {
        if !p.n.is_multiple_of(2) {
            return Err(CliError::config(format!(
                "drift streams need an even length; got {}",
                p.n
            )));
        }
        Ok(mv_drift(k, p.n / 2, p.seed)?)
    };
    let stream = match p.kind {
        Kind::NormalSwitch => normal_switch(p.n, p.period, p.seed)?,
        Kind::NormalUniform => normal_uniform(p.n, p.period, p.seed)?,
        Kind::Poisson => ng(NonGaussianKind::Poisson)?,
        Kind::Gamma => ng(NonGaussianKind::Gamma)?,
        Kind::Lognormal => ng(NonGaussianKind::LogNormal)?,
        Kind::MixedGaussian => ng(NonGaussianKind::Mixed)?,
        Kind::MeanDrift => drift(DriftKind::Mean)?,
        Kind::VarDrift => drift(DriftKind::Variance)?,
        Kind::CovDrift => drift(DriftKind::Covariance)?,
        Kind::Flat => flat(p.n, p.mean, p.sd, p.seed)?,
    };
    if p.outliers > 0.0 {
        return Ok(inject_outliers(stream, p.outliers, p.outlier_sigmas, p.seed)?);
    }
    Ok(stream)
}

pub fn run(args: &GenArgs) -> Result<()> {
    let stream = build(&GenParams::from(args))?;
    let truth = args.truth.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".truth");
        p.into()
    });
    let mut w = BufWriter::new(File::create(&args.out)?);
    stream.write_csv(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(&truth)?);
    stream.write_truth(&mut w)?;
    w.flush()?;
    eprintln!(
        "streamcpd: wrote {} rows x {} to {} and {} changepoints to {}",
        stream.len(),
        stream.dim,
        args.out.display(),
        stream.truth.len(),
        truth.display()
    );
    Ok(())
}
