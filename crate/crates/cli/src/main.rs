mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ghostkit::analysis::SweepConfig;

#[derive(Parser, Debug)]
#[command(name = "ghostkit", version, about = "JPEG ghost forgery detection and localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep a suspect image, estimate its cover quality and write the tamper mask.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthesize a forgery from a JSON spec file.
    Forge {
        spec: PathBuf,
        /// Source image; overrides the spec file's `input`.
        #[arg(long, conflicts_with = "synthetic")]
        input: Option<PathBuf>,
        /// Use the built-in synthetic scene with this seed as the source.
        #[arg(long)]
        synthetic: Option<u64>,
        /// Output file stem; defaults to the spec file stem.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a ghost-insertion dataset over a (cover, ghost) quality grid.
    Dataset {
        /// Directory of TIFF/PNG/JPEG source images.
        corpus: Option<PathBuf>,
        /// Cover qualities; defaults to 40,45,...,90.
        #[arg(long, value_delimiter = ',')]
        covers: Vec<u32>,
        /// Ghost qualities; defaults to 40,45,...,100.
        #[arg(long, value_delimiter = ',')]
        ghosts: Vec<u32>,
        /// Drop pairs whose ghost quality equals the cover quality (always on for the default grid).
        #[arg(long)]
        skip_same: bool,
        /// Ghost rectangle as x,y,w,h.
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [190, 60, 64, 64])]
        region: Vec<usize>,
        /// Quality of the final composite save.
        #[arg(long, default_value_t = 100)]
        resave_q: u32,
        /// Only count the planned composites.
        #[arg(long)]
        dry_run: bool,
        /// Corpus size for a dry run without a corpus directory.
        #[arg(long, requires = "dry_run")]
        images: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Localize every manifest entry and score it against its ground truth.
    Evaluate {
        manifest: PathBuf,
        /// Quality tolerance in sweep steps.
        #[arg(long, default_value_t = 1)]
        tolerance: u32,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Png,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 30)]
    sweep_min: u32,
    #[arg(long, default_value_t = 100)]
    sweep_max: u32,
    #[arg(long, default_value_t = 2)]
    sweep_step: u32,
    /// Output directory.
    #[arg(long, env = "GHOSTKIT_OUT", default_value = ".")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = default_jobs(), value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Outputs to write.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Png, Format::Csv, Format::Json])]
    format: Vec<Format>,
}

fn default_jobs() -> u32 {
    std::thread::available_parallelism().map_or(1, |n| n.get() as u32)
}

impl Common {
    fn sweep(&self) -> anyhow::Result<SweepConfig> {
        Ok(SweepConfig::new(self.sweep_min, self.sweep_max, self.sweep_step)?)
    }

    fn wants(&self, format: Format) -> bool {
        self.format.contains(&format)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
