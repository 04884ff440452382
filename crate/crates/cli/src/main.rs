use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use timbretone::analysis::{Diagonal, MeanSource};
use timbretone::pipeline::{self, DiffOptions, ExtractOptions, ReportOptions};
use timbretone::{Error, MapKind, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "timbretone", version, about = "Timbre and tonal-system maps of a music corpus")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// CSV manifest with columns id,path,group[,notes]
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory for stores and plots
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for map initialization and presentation order
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for extraction
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML or JSON file overriding stage parameters
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Timbre,
    Tonal,
}

impl From<Which> for MapKind {
    fn from(w: Which) -> Self {
        match w {
            Which::Timbre => MapKind::Timbre,
            Which::Tonal => MapKind::Tonal,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Main,
    Anti,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract timbre features and tonal systems for every manifest entry
    Extract {
        /// Write per-piece pitch tracks to pitch/<id>.csv
        #[arg(long)]
        dump_pitch: bool,
        /// Write per-piece note events to notes/<id>.csv
        #[arg(long)]
        dump_notes: bool,
    },
    /// Train a map and write grid, placements and u-matrix
    Train {
        #[arg(value_enum)]
        which: Which,
    },
    /// Re-place stored pieces on a trained map
    Place {
        #[arg(value_enum)]
        which: Which,
    },
    /// Recompute the u-matrix of a trained map
    Umatrix {
        #[arg(value_enum)]
        which: Which,
    },
    /// Difference of mean tonal systems across the map's triangular split
    Diff {
        /// Keep cent bin 0 in the outputs
        #[arg(long)]
        include_fundamental: bool,
        /// Orient the split so this group lies in the upper-right side
        #[arg(long)]
        upper_group: Option<String>,
        #[arg(long, value_enum, default_value = "main")]
        split: Split,
        /// Exchange the two sides
        #[arg(long)]
        swap: bool,
        /// Average neuron weights instead of the placed pieces' histograms
        #[arg(long)]
        neuron_means: bool,
    },
    /// Separation summary and feature-importance exports
    Report {
        #[arg(value_enum)]
        which: Which,
        /// Only plot importance for this group
        #[arg(long)]
        group: Option<String>,
    },
}

fn config(common: &Common) -> timbretone::Result<RunConfig> {
    let mut cfg = match pipeline::load_run_config(&common.out)? {
        Some(c) => c,
        None => RunConfig::new(&common.out),
    };
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.manifest.is_some() {
        cfg.manifest = common.manifest.clone();
    }
    cfg.jobs = common.jobs;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> timbretone::Result<()> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Extract { dump_pitch, dump_notes } => {
            let s = pipeline::extract(&cfg, ExtractOptions { dump_pitch, dump_notes })?;
            println!(
                "{} pieces: {} timbre records, {} tonal records, {} exclusions",
                s.pieces,
                s.timbre_records,
                s.tonal_records,
                s.exclusions.len()
            );
        }
        Command::Train { which } => {
            let s = pipeline::train(&cfg, which.into())?;
            println!(
                "trained {}x{} map, placed {} pieces",
                s.grid.rows,
                s.grid.cols,
                s.placements.len()
            );
        }
        Command::Place { which } => {
            let p = pipeline::place(&cfg, which.into())?;
            println!("placed {} pieces", p.len());
        }
        Command::Umatrix { which } => {
            let u = pipeline::umatrix(&cfg, which.into())?;
            println!("u-matrix {}x{}", u.rows, u.cols);
        }
        Command::Diff {
            include_fundamental,
            upper_group,
            split,
            swap,
            neuron_means,
        } => {
            let opts = DiffOptions {
                include_fundamental,
                upper_group,
                diagonal: match split {
                    Split::Main => Diagonal::Main,
                    Split::Anti => Diagonal::Anti,
                },
                swap,
                source: if neuron_means { MeanSource::Neurons } else { MeanSource::Pieces },
            };
            let d = pipeline::diff(&cfg, &opts)?;
            println!(
                "difference profile: {} upper-right, {} lower-left placements",
                d.upper_count, d.lower_count
            );
        }
        Command::Report { which, group } => {
            let r = pipeline::report(&cfg, which.into(), &ReportOptions { group })?;
            println!("purity {:.3}", r.purity);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        return 1;
    }
    match e {
        Error::Serde(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
