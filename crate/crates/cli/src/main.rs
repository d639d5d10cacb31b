use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcmq::KernelFamily;
use lcmq_cli::{
    cmd_kernel_check, cmd_solve, cmd_sweep, exit, load_config, parse_family_list, parse_shape_list, CliError,
};

#[derive(Parser)]
#[command(name = "lcmq", version, about = "Adaptive local multiquadric collocation for Poisson problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive solver.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the final global matrix in coordinate format.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Fixed-cloud error over shape parameters and kernel families.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `0.2,0.4,...` or `start:stop:step`.
        #[arg(long = "c", default_value = "0.2:3.0:0.2")]
        shapes: String,
        #[arg(long, default_value = "cmq,mq")]
        family: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic kernel Laplacians with finite differences.
    KernelCheck {
        #[arg(long, default_value = "cmq,mq")]
        family: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { config, out, dump_matrix } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let result = cmd_solve(&cfg, &out, dump_matrix)?;
            for r in &result.run.records {
                println!(
                    "cycle {:>2}  nodes {:>5}  max C {:>3}  rmse {:.3e}  max {:.3e}  E_max {:.3e}  {}",
                    r.cycle, r.node_count, r.max_cover, r.rmse, r.max_abs_error, r.max_indicator, r.action
                );
            }
            println!("{:?}; results in {}", result.run.termination, out.display());
            Ok(result.exit_code)
        }
        Command::Sweep { config, shapes, family, out } => {
            let cfg = load_config(&config)?;
            let shapes = parse_shape_list(&shapes)?;
            let families = parse_family_list(&family)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let rows = cmd_sweep(&cfg, &out, &shapes, &families)?;
            for f in &families {
                let ratio = lcmq::problems::sensitivity_ratio(rows.iter().filter(|r| r.family == *f));
                println!("{f}: max/min rmse = {ratio:.3e}");
            }
            Ok(exit::OK)
        }
        Command::KernelCheck { family, samples, seed } => {
            let families: Vec<KernelFamily> = parse_family_list(&family)?;
            let report = cmd_kernel_check(&families, samples, seed);
            for (f, d) in &report.per_family {
                println!("{f}: max relative discrepancy {d:.3e}");
            }
            Ok(if report.passed() { exit::OK } else { exit::ERROR })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
