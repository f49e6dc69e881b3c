use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conceptor_lab::config::EmitKind;
use conceptor_lab::{presets, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "conceptor-lab", version, about = "Store, recall and morph patterns in conceptor-controlled reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a built-in preset.
    Run(RunArgs),
    /// List the built-in presets, or print one as a config file.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Overrides both the reservoir and the training seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated artifact kinds, replacing the configured set.
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<String>>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset `{name}` (see `conceptor-lab presets`)"))
        })?,
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(kinds) = &args.emit {
        cfg.emit = kinds.iter().map(|k| EmitKind::parse(k)).collect::<Result<_, _>>()?;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let (outcome, written) = conceptor_lab::run(&cfg)?;
    for (name, r) in &outcome.reports {
        println!("{name}: mean NRMSE {:.4} (min {:.4}, max {:.4})", r.mean, r.min, r.max);
    }
    for (j, c) in outcome.chaotic.iter().enumerate() {
        println!("pattern_{j}: in box {}, coverage {:.3}", c.in_box, c.coverage);
    }
    if let Some(m) = &outcome.morph {
        for (seg, h) in [("pre", &m.pre), ("post", &m.post)] {
            if let Some(h) = h {
                println!("{seg} hold at mu {}: period {:?}, NRMSE vs recall {:?}", h.mu, h.dominant_period, h.nrmse);
            }
        }
    }
    println!("wrote {} files to {}", written.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONCEPTOR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Presets { show: Some(name) } => match presets::preset(name) {
            Some(cfg) => {
                print!("{}", cfg.to_toml());
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown preset `{name}`"))),
        },
        Command::Presets { show: None } => {
            for name in presets::NAMES {
                println!("{name:26} {}", presets::describe(name));
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
