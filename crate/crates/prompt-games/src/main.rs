//! Command-line surface.
//!
//! Exit codes: 0 success, 2 schema/validation failure, 3 upstream oracle
//! failure, 4 internal solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use prompt_games::error::Error;
use prompt_games::game::{solve_behavioral_nash, Player};
use prompt_games::reasoning::lift;
use prompt_games::report::{emit_json, emit_text, run, LiftedSection, RunOptions};
use prompt_games::scenario::{load_scenario, write_builtin_rps, Scenario};
use prompt_games::analysis::utility_gap;

#[derive(Parser)]
#[command(name = "prompt-games", version, about = "Equilibrium solver for prompt-lifted finite games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and emit a report.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Override the scenario's equilibrium tolerance.
        #[arg(long)]
        eps: Option<f64>,
        /// Include every mixed reasoning equilibrium, not just the
        /// canonical first one.
        #[arg(long)]
        all_mixed: bool,
        /// Override the HTTP oracle cache path.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Emit the lifted matrices only.
    Lift { scenario: PathBuf },
    /// Emit the behavioral Nash equilibria of the base game only.
    Nash { scenario: PathBuf },
    /// Behavioral-vs-reasoning utility gap against a fixed opponent prompt.
    Gap {
        scenario: PathBuf,
        #[arg(long)]
        player: Player,
        #[arg(long)]
        opponent_prompt: String,
    },
    /// Write a built-in scenario to disk.
    Init {
        /// Scenario name; currently only "rps".
        name: String,
        /// Target directory.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, Error> {
    load_scenario(path)
}

fn real_main() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            format,
            eps,
            all_mixed,
            cache,
        } => {
            let scenario = load(&scenario)?;
            let oracle = scenario.build_oracle(cache.as_deref())?;
            let report = run(&scenario, oracle.as_ref(), &RunOptions { all_mixed, eps })?;
            match format {
                Format::Json => print!("{}", emit_json(&report)?),
                Format::Table => print!("{}", emit_text(&report)),
            }
        }
        Command::Lift { scenario } => {
            let scenario = load(&scenario)?;
            let oracle = scenario.build_oracle(None)?;
            let lifted = lift(
                &scenario.game,
                oracle.as_ref(),
                &scenario.mindset_a,
                &scenario.mindset_d,
            )?;
            let section = LiftedSection::from(&lifted);
            print!("{}", emit_json(&section)?);
        }
        Command::Nash { scenario } => {
            let scenario = load(&scenario)?;
            let profiles = solve_behavioral_nash(&scenario.game, scenario.eps)?;
            print!("{}", emit_json(&profiles)?);
        }
        Command::Gap {
            scenario,
            player,
            opponent_prompt,
        } => {
            let scenario = load(&scenario)?;
            let oracle = scenario.build_oracle(None)?;
            let opponent = player.other();
            let opponent_mindset = scenario.mindset(opponent);
            let prompt = opponent_mindset.prompt(&opponent_prompt)?;
            let query = prompt_games::oracle::OracleQuery {
                player: opponent,
                info: &opponent_mindset.info,
                prompt,
                worldview: &opponent_mindset.worldview,
                actions: scenario.game.actions(opponent),
            };
            let opponent_mu = oracle.induce_policy(&query)?;
            let report = utility_gap(
                &scenario.game,
                oracle.as_ref(),
                scenario.mindset(player),
                player,
                &opponent_mu,
            )?;
            print!("{}", emit_json(&report)?);
        }
        Command::Init { name, dir } => {
            if name != "rps" {
                return Err(Error::ValidationError(format!(
                    "unknown built-in scenario {name:?}; available: rps"
                )));
            }
            let path = write_builtin_rps(&dir)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
