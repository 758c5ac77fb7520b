use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use transpol_cli::run::{run_check, solve};
use transpol_cli::{emit_figure_data, run_scenario, Check, Figure, InputError, RunError, RunOptions, Scenario, Solver};

#[derive(Parser)]
#[command(name = "transpol", version, about = "Transboundary pollution control: closed forms, oracle and checks")]
struct Cli {
    /// Seed for Monte Carlo heat convolutions (overrides `mc_seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fill model constants missing from the scenario with a named preset.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,

    /// Run independent solvers concurrently and sample fields in parallel.
    #[arg(long, global = true)]
    parallel: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    #[value(name = "paper-2015")]
    Paper2015,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver and check of a scenario and write CSVs, report.txt and MANIFEST.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the surface data of fig1, fig2 or fig_unbounded.
    Figure {
        name: String,
        /// Scenario to use instead of the shipped one.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one check and print its report; exits 1 if an applicable check fails.
    Check {
        scenario: PathBuf,
        #[arg(long)]
        prop: String,
        /// Restrict field checks to one solver.
        #[arg(long)]
        solver: Option<String>,
    },
}

fn load(path: &std::path::Path, cli: &Cli) -> Result<Scenario, RunError> {
    Ok(apply_seed(Scenario::from_file(path, cli.preset.is_some())?, cli))
}

fn apply_seed(mut s: Scenario, cli: &Cli) -> Scenario {
    if let Some(seed) = cli.seed {
        s = s.with_seed(seed);
    }
    s
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let opts = RunOptions { parallel: cli.parallel };
    match &cli.command {
        Command::Run { scenario, out } => {
            let mut s = load(scenario, cli)?;
            if let Some(o) = out {
                s.out_dir = o.clone();
            }
            let summary = run_scenario(&s, opts)?;
            print!("{}", summary.report);
            Ok(())
        }
        Command::Figure { name, scenario, out } => {
            let fig: Figure = name.parse()?;
            let mut s = match scenario {
                Some(p) => load(p, cli)?,
                None => apply_seed(fig.canonical(), cli),
            };
            if let Some(o) = out {
                s.out_dir = o.clone();
            }
            let shape = emit_figure_data(fig, &s, opts.execution())?;
            print!("{}", shape.render());
            Ok(())
        }
        Command::Check { scenario, prop, solver } => {
            let check: Check = prop.parse().map_err(|m: String| InputError::Field {
                field: "--prop".into(),
                line: None,
                message: m,
            })?;
            let mut s = load(scenario, cli)?;
            if let Some(v) = solver {
                let v: Solver = v.parse().map_err(|m: String| InputError::Field {
                    field: "--solver".into(),
                    line: None,
                    message: m,
                })?;
                s.solvers = vec![v];
            }
            let needs_fields = matches!(check, Check::AggregateDecay | Check::UpperBound);
            let mut outputs = Vec::new();
            if needs_fields {
                for &v in &s.solvers {
                    outputs.push(solve(&s, v, opts.execution()).map_err(|e| RunError::Solver(format!("{v}: {e}")))?);
                }
            }
            let reports = run_check(&s, check, &outputs, opts.execution()).map_err(|e| RunError::Solver(e.to_string()))?;
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                ok &= r.passed();
            }
            if ok {
                Ok(())
            } else {
                Err(RunError::Solver(format!("{} does not hold", check.name())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
