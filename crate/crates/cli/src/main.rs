use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use losstopo::harness::{self, ExperimentConfig, LandscapeChoice};

#[derive(Parser)]
#[command(name = "losstopo", version, about = "Loss-landscape experiments on MNIST networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "runs/default")]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, overriding the config (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> losstopo::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Landscape {
    Train,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Train the ensemble with SGD and L-BFGS-GSS and store the four solution sets.
    Train(Common),
    /// Barrier-height survey of stored solution sets.
    Pathsurvey {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "train")]
        landscape: Landscape,
        /// Comma-separated subset of the landscape's solution sets.
        #[arg(long, value_delimiter = ',')]
        sets: Vec<String>,
    },
    /// kPCA, centroid-shell and component statistics of stored solution sets.
    Analyze(Common),
    /// Low-height paths on the two-dimensional synthetic surface.
    Synth(Common),
    /// Print the default config as TOML.
    DefaultConfig,
    /// Check artifact checksums listed in an output directory's manifest.
    Verify {
        #[arg(long, default_value = "runs/default")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> losstopo::Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            let r = harness::cmd_train(&cfg, &c.out)?;
            println!("{}", serde_json::to_string_pretty(&r.summary)?);
        }
        Command::Pathsurvey { common, landscape, sets } => {
            let cfg = common.load()?;
            let choice = match landscape {
                Landscape::Train => LandscapeChoice::Train,
                Landscape::Test => LandscapeChoice::Test,
            };
            let r = if sets.is_empty() {
                harness::cmd_pathsurvey(&cfg, &common.out, choice)?
            } else {
                let names: Vec<&str> = sets.iter().map(String::as_str).collect();
                harness::cmd_pathsurvey_sets(&cfg, &common.out, choice, &names)?
            };
            println!("landscape {}", r.landscape);
            for (name, s) in &r.summaries {
                println!("{name:>10}  pairs {:>3}  median height {:.6}  mean {:.6}", s.count, s.median, s.mean);
            }
        }
        Command::Analyze(c) => {
            let cfg = c.load()?;
            let r = harness::cmd_analyze(&cfg, &c.out)?;
            for cmp in &r.comparisons {
                println!(
                    "{} vs {}: median distance {:.6} vs {:.6}, centroid offset {:.6}",
                    cmp.a, cmp.b, cmp.shell.summary_a.median, cmp.shell.summary_b.median, cmp.shell.centroid_offset
                );
            }
            for (name, s) in &r.components {
                println!("{name:>10}  mu {:+.6e}  sigma {:.6e}", s.mean, s.std);
            }
        }
        Command::Synth(c) => {
            let cfg = c.load()?;
            let r = harness::with_workers(cfg.workers, || harness::cmd_synth(&c.out))??;
            println!("straight line H = {:.4}", r.straight_line_height);
            for p in &r.paths {
                println!("lambda {:>6}  H = {:.4}", p.lambda, p.height);
            }
        }
        Command::DefaultConfig => print!("{}", ExperimentConfig::default().to_toml()?),
        Command::Verify { out } => {
            let bad = harness::verify_manifest(&out)?;
            if !bad.is_empty() {
                return Err(losstopo::Error::SolutionFile(format!("checksum mismatch: {}", bad.join(", "))));
            }
            println!("all artifacts match");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
