use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use percolab::config::{load_config, Command, Format, Geometry, Overrides, Source, WindowSpec};
use percolab::experiments::{run, EXIT_CONFIG, EXIT_FAILURE};

#[derive(Parser, Debug)]
#[command(name = "percolab", version, about = "Invasion and near-critical percolation experiments on Z^2")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML file with experiment keys; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Invasion trace and running suffix maximum.
    Invade,
    /// Left-right crossing probability of a square.
    Crossing,
    /// Correlation length p_n for each n in the list.
    Corrlen,
    /// One-arm probability to the boundary of B(n).
    Onearm,
    /// Conditioned arm ratio and its sandwich bounds.
    IicNu,
    /// Upper bound on the invasion measure of a window event.
    Certificate,
    /// Invasion versus incipient cluster gap on annuli.
    Gap,
    /// The same comparison on boxes.
    BoxGap,
    /// Disconnecting-edge events per window.
    DsvCount,
    /// Run the built-in oracle suite.
    Selftest,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Invade => Command::Invade,
            Cmd::Crossing => Command::Crossing,
            Cmd::Corrlen => Command::Corrlen,
            Cmd::Onearm => Command::Onearm,
            Cmd::IicNu => Command::IicNu,
            Cmd::Certificate => Command::Certificate,
            Cmd::Gap => Command::Gap,
            Cmd::BoxGap => Command::BoxGap,
            Cmd::DsvCount => Command::DsvCount,
            Cmd::Selftest => Command::Selftest,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long = "big-n", visible_alias = "N", global = true)]
    big_n: Option<u32>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true)]
    max_replicas: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<u32>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    /// Comma-separated `inner:outer` annuli.
    #[arg(long, global = true, value_delimiter = ',')]
    windows: Option<Vec<WindowSpec>>,
    #[arg(long, global = true, value_enum)]
    source: Option<Source>,
    #[arg(long, global = true, value_enum)]
    geometry: Option<Geometry>,
    #[arg(long, global = true)]
    checks: Option<u64>,
    #[arg(long, global = true)]
    c_hat: Option<f64>,
    #[arg(long, global = true)]
    confidence: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "PERCOLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl Flags {
    fn into_overrides(self, command: Command) -> Overrides {
        Overrides {
            command: Some(command),
            n: self.n,
            big_n: self.big_n,
            p: self.p,
            epsilon: self.epsilon,
            tolerance: self.tolerance,
            replicas: self.replicas,
            max_replicas: self.max_replicas,
            horizon: self.horizon,
            steps: self.steps,
            burn_in: self.burn_in,
            grid: self.grid,
            n_list: self.n_list,
            windows: self.windows,
            source: self.source,
            geometry: self.geometry,
            checks: self.checks,
            c_hat: self.c_hat,
            confidence: self.confidence,
            seed: self.seed,
            workers: self.workers,
            output: self.output,
            format: self.format,
        }
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = cli.flags.into_overrides(cli.command.into());
    let cfg = match load_config(cli.config.as_deref(), flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("percolab: {e}");
            return exit(EXIT_CONFIG);
        }
    };
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("percolab: cannot create {}: {e}", path.display());
                return exit(EXIT_FAILURE);
            }
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let result = run(&cfg, &mut out, &mut io::stderr());
    let flushed = out.flush();
    match result {
        Ok(status) => {
            if let Err(e) = flushed {
                eprintln!("percolab: {e}");
                return exit(EXIT_FAILURE);
            }
            exit(status.exit_code())
        }
        Err(e) => {
            eprintln!("percolab: {e}");
            exit(e.exit_code())
        }
    }
}
