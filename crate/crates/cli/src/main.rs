use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fapprox_cli::{run, Command, Format, GroupSource, RunConfig, DEFAULT_SAMPLES, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "fapprox", version, about = "Tower construction and F-inverse cover verification")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the group chain over a graph and verify it.
    Tower { input: PathBuf },
    /// Build and verify the F-inverse cover of a Margolis–Meakin expansion.
    Fcover {
        /// Group table with a `gens` line.
        #[arg(long, group = "q")]
        table: Option<PathBuf>,
        /// Labelled action graph whose transition group is `Q`.
        #[arg(long, group = "q")]
        graph: Option<PathBuf>,
        /// Cyclic group of this order.
        #[arg(long, group = "q")]
        cyclic: Option<usize>,
    },
    /// Check the inverse monoid laws and the F-inverse property of a table.
    CheckMonoid { input: PathBuf },
    /// Diagnose the full coset extensions over all covers at one level.
    DiagnoseCe {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true)]
    max_level: Option<usize>,
    #[arg(long, global = true, env = "FAPPROX_BUDGET_ELEMENTS")]
    budget_elements: Option<usize>,
    #[arg(long, global = true, env = "FAPPROX_BUDGET_VERTICES")]
    budget_vertices: Option<usize>,
    #[arg(long, global = true, default_value_t = 2)]
    cycle_len: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Build each level from single-subset extensions only.
    #[arg(long, global = true)]
    lean: bool,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Tower { input } => Command::Tower { input },
        Cmd::CheckMonoid { input } => Command::CheckMonoid { input },
        Cmd::DiagnoseCe { input, level } => Command::DiagnoseCe { input, level },
        Cmd::Fcover { table, graph, cyclic } => {
            let source = match (table, graph, cyclic) {
                (Some(t), _, _) => GroupSource::Table(t),
                (_, Some(g), _) => GroupSource::Graph(g),
                (_, _, Some(n)) => GroupSource::Cyclic(n),
                _ => {
                    eprintln!("fcover needs one of --table, --graph or --cyclic");
                    return ExitCode::from(fapprox_cli::EXIT_INPUT as u8);
                }
            };
            Command::Fcover { source }
        }
    };
    let mut config = RunConfig::new(command);
    let o = cli.opts;
    if let Some(m) = o.max_level {
        config.max_level = m;
    }
    if let Some(b) = o.budget_elements {
        config.element_budget = b;
    }
    if let Some(b) = o.budget_vertices {
        config.vertex_budget = b;
    }
    config.cycle_len = o.cycle_len;
    config.samples = o.samples;
    config.seed = o.seed;
    config.lean = o.lean;
    config.format = match o.format {
        OutFormat::Json => Format::Json,
        OutFormat::Text => Format::Text,
    };
    config.out = o.out;

    let report = run(&config);
    let rendered = report.render(config.format);
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(fapprox_cli::EXIT_INPUT as u8);
            }
            println!("{}: {} (exit {})", report.command, report.status, report.exit_code);
        }
        None => print!("{rendered}"),
    }
    ExitCode::from(report.exit_code as u8)
}
