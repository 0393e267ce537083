use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use popflow::diagnostics::{case1_threshold, case2_threshold, BlowupCase};
use popflow::oracle::selftest;
use popflow::scenario::{emit_preset, parse_config, preset_summaries, run_scenario, RunOverrides};
use popflow::Error;

const EXIT_INTERNAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(name = "popflow", version, about = "Nonlocal advection-diffusion simulator for interacting populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.directory`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Noise seed for the initial condition.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List presets or write one out as TOML.
    Preset {
        #[arg(long, conflicts_with_all = ["name", "emit"])]
        list: bool,
        #[arg(long, requires = "emit")]
        name: Option<String>,
        #[arg(long, requires = "name")]
        emit: Option<PathBuf>,
    },
    /// Critical interaction strength for the blow-up cases.
    Thresholds {
        #[arg(long = "case", value_parser = clap::value_parser!(u8).range(1..=2))]
        case_id: u8,
        #[arg(long, allow_negative_numbers = true)]
        mass: f64,
        #[arg(long)]
        dmax: f64,
        #[arg(long)]
        volume: f64,
        #[arg(long, default_value_t = 1)]
        species: usize,
    },
    /// Run the numerical oracle suite.
    Selftest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::ConfigParse(_)
                | Error::ConfigValue { .. }
                | Error::UnknownPreset { .. }
                | Error::MassPrecondition { .. }
                | Error::KernelSupport { .. }
                | Error::InvalidKernel(_)
                | Error::InvalidModel(_)
                | Error::InvalidGrid(_) => EXIT_CONFIG,
                _ => EXIT_INTERNAL,
            })
        }
    }
}

fn dispatch(command: Command) -> popflow::Result<u8> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::ConfigParse(format!("{}: {e}", config.display())))?;
            let scenario = parse_config(&text)?;
            let report = run_scenario(
                &scenario,
                &RunOverrides {
                    out_dir: out,
                    seed,
                    threads,
                },
            )?;
            let term = &report.manifest.termination;
            println!(
                "{}: t = {} after {} steps ({:.1} s), output in {}",
                term.reason,
                report.manifest.t_final,
                term.steps,
                term.wall_seconds,
                report.out_dir.display()
            );
            if let popflow::Termination::Blowup { cause } = &report.outcome.termination {
                println!("blow-up: {cause}");
                return Ok(EXIT_BLOWUP);
            }
            Ok(0)
        }
        Command::Preset { list, name, emit } => {
            if let (Some(name), Some(path)) = (name, emit) {
                let text = emit_preset(&name)?;
                std::fs::write(&path, text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                println!("wrote {}", path.display());
            } else if list {
                for (name, summary) in preset_summaries() {
                    println!("{name:<14} {summary}");
                }
            } else {
                return Err(Error::ConfigValue {
                    key: "preset".into(),
                    message: "pass --list, or --name with --emit".into(),
                });
            }
            Ok(0)
        }
        Command::Thresholds {
            case_id,
            mass,
            dmax,
            volume,
            species,
        } => {
            let case = if case_id == 1 { BlowupCase::Case1 } else { BlowupCase::Case2 };
            let (star, required, condition) = match case {
                BlowupCase::Case1 => (
                    case1_threshold(mass, dmax, volume)?,
                    volume / 2.0,
                    "every gamma_ij < 0",
                ),
                BlowupCase::Case2 => (
                    case2_threshold(mass, dmax, volume, species)?,
                    species as f64 * volume / 2.0,
                    "gamma_ii < 0, gamma_ij >= 0 (i != j), sum_{j != i} (gamma_ij + gamma_ji) < -gamma_ii",
                ),
            };
            println!("γ* = {star:?}");
            println!("mass precondition: P = {mass} > {required} holds");
            println!("structural condition: {condition}");
            println!("blow-up in finite time when gamma < {star:?}");
            Ok(0)
        }
        Command::Selftest => {
            let checks = selftest()?;
            let mut failed = 0;
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {:<36} {:.3e} (limit {:.0e})", c.name, c.value, c.limit);
                failed += usize::from(!c.passed);
            }
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { 0 } else { EXIT_INTERNAL })
        }
    }
}
