use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "kvariates",
    version,
    about = "k-variates++ seeding: centralized, distributed, streaming, online and private"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base random seed; every run is a deterministic function of it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file, one point per row.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// k-means++ or k-variates++ with product-Laplace densities.
    Seed {
        #[command(flatten)]
        data: DataArgs,
        /// Per-coordinate standard deviation of the local densities.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Distributed seeding over simulated peers.
    Dkm {
        #[command(flatten)]
        data: DataArgs,
        /// Number of peers, built as k-means++ Voronoi cells.
        #[arg(long)]
        peers: usize,
        /// Percentage of points migrated to a random peer.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Laplace noise on shared centers (0 keeps the protected variant).
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Streaming seeding over `n` synopses.
    Skm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Builder::Online)]
        builder: Builder,
    },
    /// Online seeding over consecutive minibatches.
    Okm {
        #[command(flatten)]
        data: DataArgs,
        /// Minibatch size (defaults to ceil(m / k)).
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Differentially private seeding.
    Dp {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Sampled configurations for the spread estimates.
        #[arg(long, default_value_t = 5000)]
        nest: usize,
    },
    /// Neighborhood spread estimates and derived noise levels.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        nest: usize,
        /// Enumerate configurations exactly (tiny datasets only).
        #[arg(long)]
        exact: bool,
    },
    /// Baseline seeders.
    Baseline {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        algorithm: Baseline,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Synthetic hyperrectangle clusters.
    Gen {
        #[arg(long)]
        d: usize,
        /// Minimum number of points.
        #[arg(long)]
        m: usize,
        /// Percentage of points migrated between cluster peers.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
    },
    /// Repeated trials of several seeders on one dataset.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Seeders to compare (default: kmeanspp, kmeans-parallel, forgy).
        #[arg(long, value_enum, value_delimiter = ',')]
        algorithms: Vec<BenchAlgorithm>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builder {
    Online,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Calibrated,
    Mechanism,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    KmeansParallel,
    ForgyDp,
    Gupt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchAlgorithm {
    Kmeanspp,
    KmeansParallel,
    Forgy,
    Okm,
}
