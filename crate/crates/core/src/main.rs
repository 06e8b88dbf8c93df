use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ect_concolic::harness::{self, CampaignConfig, MockChoice, SelectMode, SolverMode};
use ect_concolic::targets;

#[derive(Parser)]
#[command(version, about = "Coverage-tree guided concolic testing of parser programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Baseline,
    Llm,
    LlmValidated,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Ect,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum MockArg {
    Syntax,
    Adversarial,
    Echo,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by an INI config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        #[arg(long, value_enum)]
        select: Option<SelectArg>,
        #[arg(long, value_enum)]
        mock: Option<MockArg>,
        #[arg(long)]
        max_iterations: Option<u64>,
    },
    /// Run one input through a target and print its outcome.
    Replay {
        #[arg(long)]
        target: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Summarize a campaign output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run {
            config,
            solver,
            select,
            mock,
            max_iterations,
        } => {
            let mut cfg = CampaignConfig::load(&config)?;
            if let Some(s) = solver {
                cfg.solver_mode = match s {
                    SolverArg::Baseline => SolverMode::Baseline,
                    SolverArg::Llm => SolverMode::Llm,
                    SolverArg::LlmValidated => SolverMode::LlmValidated,
                };
            }
            if let Some(s) = select {
                cfg.select_mode = match s {
                    SelectArg::Ect => SelectMode::Ect,
                    SelectArg::All => SelectMode::All,
                };
            }
            if let Some(m) = mock {
                cfg.llm.mock = match m {
                    MockArg::Syntax => MockChoice::Syntax,
                    MockArg::Adversarial => MockChoice::Adversarial,
                    MockArg::Echo => MockChoice::Echo,
                    MockArg::Off => MockChoice::Off,
                };
            }
            if max_iterations.is_some() {
                cfg.max_iterations = max_iterations;
            }
            let out = cfg.output_dir.clone();
            let m = harness::run_campaign(cfg)?;
            println!(
                "{} iterations, {} test cases, pass rate {:.4}, {} taken nodes, direct solve rate {:.4}",
                m.iteration, m.executed, m.pass_rate, m.taken_nodes, m.direct_solve_rate
            );
            println!("outputs in {}", out.display());
        }
        Command::Replay { target, input } => {
            let program = targets::by_name(&target)
                .ok_or_else(|| format!("unknown target {target:?}; known: {}", targets::names().join(", ")))?;
            let bytes = std::fs::read(&input).map_err(|e| format!("{}: {e}", input.display()))?;
            let r = harness::replay(&program, &bytes);
            println!("{}", serde_json::to_string_pretty(&r)?);
            // inside a campaign corpus, also check the recorded constraint
            let dir = input.parent().and_then(|p| p.parent());
            let name = input.file_name().and_then(|n| n.to_str());
            if let (Some(dir), Some(name)) = (dir, name) {
                if let Ok(recs) = harness::read_provenance(dir) {
                    for rec in recs {
                        if rec.file == name {
                            if let Some(pc) = rec.target {
                                println!(
                                    "recorded constraint {} holds: {}",
                                    pc.assertion(),
                                    pc.holds_on(&bytes)
                                );
                            }
                        }
                    }
                }
            }
        }
        Command::Report { dir, json } => {
            let r = harness::report(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print!("{r}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
