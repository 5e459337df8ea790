mod commands;
mod documents;
mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "huepath", version, about = "Preference-driven sequential colormap tools")]
struct Cli {
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct EnvArgs {
    /// Corpus document; the bundled starter corpus when omitted.
    #[arg(long, env = "HUEPATH_CORPUS")]
    pub corpus: Option<PathBuf>,

    /// Seed of the quantized state space.
    #[arg(long, default_value_t = 0)]
    pub space_seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quantize the sRGB gamut into the state space and write it out.
    Quantize {
        #[arg(long, default_value_t = 0)]
        seed_rng: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a preference model against a simulated oracle.
    Train {
        #[arg(long)]
        seed_color: String,
        /// Weight file (JSON array of 9 numbers) or `random`.
        #[arg(long)]
        oracle: String,
        #[arg(long, default_value_t = 15)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// Answer by argmax instead of sampling the likelihood.
        #[arg(long)]
        noiseless: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Rank the aligned corpus under a trained model.
    Rank {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the seed stored in the model file.
        #[arg(long)]
        seed_color: Option<String>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Plan a new colormap with Q-learning.
    Search {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed_color: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// Hex-list export of the synthesized colormap.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV export (index, Lab, 8-bit sRGB).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Compare optimistic, random and traditional Q-learning.
    Benchmark {
        /// Directory of model or weight files.
        #[arg(long)]
        models: PathBuf,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-run episode reward traces.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Report uniformity and check the invariants of an exported colormap.
    Profile {
        #[arg(long)]
        cmap: PathBuf,
        /// Also require a sample within 1 ΔE2000 of this color.
        #[arg(long)]
        seed_color: Option<String>,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, env = "HUEPATH_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "HUEPATH_RNG", default_value_t = 0)]
        rng: u64,
        #[arg(long, env = "HUEPATH_QUERIES", default_value_t = 15)]
        queries: usize,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, env = "HUEPATH_STATIC_DIR")]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        env: EnvArgs,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let json = cli.json;
    let outcome = match cli.command {
        Command::Quantize { seed_rng, out } => commands::quantize(seed_rng, &out, json),
        Command::Train { seed_color, oracle, n, rng, noiseless, out, env } => {
            commands::train(&env, &seed_color, &oracle, n, rng, noiseless, &out, json)
        }
        Command::Rank { model, seed_color, top, env } => commands::rank(&env, &model, seed_color.as_deref(), top, json),
        Command::Search { model, seed_color, episodes, rng, out, csv, env } => {
            commands::search(&env, &model, seed_color.as_deref(), episodes, rng, &out, csv.as_deref(), json)
        }
        Command::Benchmark { models, reps, episodes, rng, out, traces, env } => {
            commands::benchmark(&env, &models, reps, episodes, rng, &out, traces.as_deref(), json)
        }
        Command::Profile { cmap, seed_color } => commands::profile(&cmap, seed_color.as_deref(), json),
        Command::Serve { addr, rng, queries, episodes, static_dir, env } => {
            commands::serve(&env, addr, rng, queries, episodes, static_dir)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
