//! `bench`: the generator x algorithm grid, scored under both penalty modes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use streamcpd::{
    mae_with_penalty, CusumConfig, CusumState, DetectorConfig, EwmaConfig, EwmaState, InputTransform, MvDetector,
    PenaltyMode, StreamWithTruth, UnivariateDetector,
};

use crate::gen::{build, GenParams, Kind};
use crate::Result;

pub const HEADER: &str = "group,dataset,algorithm,setting,loss,loss_literal,j,k,runtime_s,points_per_s";

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Length of the normal-switch, normal-uniform and outlier streams.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Regime length for those streams; defaults to n/10.
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Report CSV; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Only run these groups (switching, drift, burn-in, non-gaussian, outliers, budget, warmup).
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy)]
enum Algo {
    Bocpd { budget: usize, warmup: usize },
    Cusum { burn_in: usize },
    Ewma { burn_in: usize },
}

const BOCPD: Algo = Algo::Bocpd { budget: 50, warmup: 20 };
const CUSUM: Algo = Algo::Cusum { burn_in: 100 };
const EWMA: Algo = Algo::Ewma { burn_in: 100 };

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Self::Bocpd { .. } => "bocpd",
            Self::Cusum { .. } => "cusum",
            Self::Ewma { .. } => "ewma",
        }
    }

    fn setting(self) -> String {
        match self {
            Self::Bocpd { budget, warmup } => format!("L={budget} W={warmup}"),
            Self::Cusum { burn_in } | Self::Ewma { burn_in } => format!("burn_in={burn_in}"),
        }
    }

    fn predict(self, s: &StreamWithTruth) -> Result<Vec<u64>> {
        Ok(match self {
            Self::Bocpd { budget, warmup } => {
                let events = if s.dim == 1 {
                    let cfg = DetectorConfig::autotuned().with_budget(budget).with_warmup(warmup);
                    UnivariateDetector::new(cfg, 1)?.run(&s.observations)?
                } else {
                    let cfg = DetectorConfig::autotuned().with_budget(budget).with_warmup(warmup);
                    MvDetector::new(cfg, s.dim)?.run(&s.observations)?
                };
                events.into_iter().map(|e| e.location).collect()
            }
            Self::Cusum { burn_in } => CusumState::new(CusumConfig {
                burn_in,
                ..Default::default()
            })?
            .run(&s.observations)?,
            Self::Ewma { burn_in } => EwmaState::new(EwmaConfig {
                burn_in,
                ..Default::default()
            })?
            .run(&s.observations)?,
        })
    }
}

/// One report row. Failed cells keep `None` and print as NA.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub group: &'static str,
    pub dataset: String,
    pub algorithm: &'static str,
    pub setting: String,
    pub loss: Option<u64>,
    pub loss_literal: Option<u64>,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub runtime_s: Option<f64>,
    pub points_per_s: Option<f64>,
}

impl Cell {
    pub fn csv_row(&self) -> String {
        fn na<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "NA".to_string(), |v| v.to_string())
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.group,
            self.dataset,
            self.algorithm,
            self.setting,
            na(self.loss),
            na(self.loss_literal),
            na(self.j),
            na(self.k),
            na(self.runtime_s.map(|r| format!("{r:.6}"))),
            na(self.points_per_s.map(|r| format!("{r:.0}"))),
        )
    }
}

fn score(group: &'static str, dataset: &str, stream: &Result<StreamWithTruth>, algo: Algo) -> Cell {
    let mut cell = Cell {
        group,
        dataset: dataset.to_string(),
        algorithm: algo.name(),
        setting: algo.setting(),
        loss: None,
        loss_literal: None,
        j: None,
        k: None,
        runtime_s: None,
        points_per_s: None,
    };
    let Ok(s) = stream else {
        return cell;
    };
    let started = Instant::now();
    let Ok(predicted) = algo.predict(s) else {
        return cell;
    };
    let secs = started.elapsed().as_secs_f64();
    let n = s.len() as u64;
    let (Ok(u), Ok(l)) = (
        mae_with_penalty(&s.truth, &predicted, n, PenaltyMode::Unmatched),
        mae_with_penalty(&s.truth, &predicted, n, PenaltyMode::Literal),
    ) else {
        return cell;
    };
    cell.loss = Some(u.loss);
    cell.loss_literal = Some(l.loss);
    cell.j = Some(u.j);
    cell.k = Some(u.k);
    cell.runtime_s = Some(secs);
    cell.points_per_s = (secs > 0.0).then(|| n as f64 / secs);
    cell
}

/// Computes every requested cell. Deterministic apart from the timing columns.
pub fn grid(args: &BenchArgs) -> Vec<Cell> {
    let wanted = |g: &str| args.only.as_ref().is_none_or(|o| o.iter().any(|x| x == g));
    let params = |kind: Kind| GenParams {
        kind,
        n: kind.default_len(),
        period: args.period.unwrap_or((args.n / 10).max(1)),
        changepoints: 10,
        seed: args.seed,
        outliers: 0.0,
        outlier_sigmas: 8.0,
        mean: 1e4,
        sd: 100.0,
    };
    let scaled = |kind| GenParams {
        n: args.n,
        ..params(kind)
    };
    let mut cells = Vec::new();

    let switch = build(&scaled(Kind::NormalSwitch));
    if wanted("switching") {
        let uniform = build(&scaled(Kind::NormalUniform));
        for algo in [BOCPD, CUSUM, EWMA] {
            cells.push(score("switching", "normal-switch", &switch, algo));
            cells.push(score("switching", "normal-uniform", &uniform, algo));
        }
    }
    if wanted("drift") {
        for kind in [Kind::MeanDrift, Kind::VarDrift, Kind::CovDrift] {
            let s = build(&params(kind));
            let name = kind.name();
            cells.push(score("drift", &name, &s, BOCPD));
        }
    }
    if wanted("burn-in") {
        let s = build(&GenParams {
            period: 1000,
            ..scaled(Kind::NormalSwitch)
        });
        for burn_in in [5, 100, 1000] {
            cells.push(score("burn-in", "change-every-1000", &s, Algo::Cusum { burn_in }));
        }
        cells.push(score("burn-in", "change-every-1000", &s, BOCPD));
    }
    if wanted("non-gaussian") {
        for kind in [Kind::Poisson, Kind::Gamma, Kind::Lognormal, Kind::MixedGaussian] {
            let s = build(&params(kind));
            let name = kind.name();
            for algo in [BOCPD, CUSUM] {
                cells.push(score("non-gaussian", &name, &s, algo));
            }
            if kind == Kind::Lognormal {
                let logged = s.and_then(|mut s| {
                    InputTransform::Log.apply(&mut s.observations)?;
                    Ok(s)
                });
                for algo in [BOCPD, CUSUM] {
                    cells.push(score("non-gaussian", "lognormal+log", &logged, algo));
                }
            }
        }
    }
    if wanted("outliers") {
        for f in [0.001, 0.005, 0.01, 0.1] {
            let s = build(&GenParams {
                outliers: f,
                ..scaled(Kind::NormalSwitch)
            });
            let name = format!("outliers-{}%", f * 100.0);
            for algo in [BOCPD, CUSUM] {
                cells.push(score("outliers", &name, &s, algo));
            }
        }
    }
    if wanted("budget") {
        for budget in [10, 20, 50, 100] {
            cells.push(score(
                "budget",
                "normal-switch",
                &switch,
                Algo::Bocpd { budget, warmup: 20 },
            ));
        }
    }
    if wanted("warmup") {
        for warmup in [5, 10, 20, 50] {
            cells.push(score(
                "warmup",
                "normal-switch",
                &switch,
                Algo::Bocpd { budget: 50, warmup },
            ));
        }
    }
    cells
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "{HEADER}")?;
    for cell in grid(args) {
        writeln!(out, "{}", cell.csv_row())?;
    }
    out.flush()?;
    Ok(())
}
