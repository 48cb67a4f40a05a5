use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linf::cli::{parse_window, run, CliError, Command, Options};

#[derive(Parser)]
#[command(name = "linf", version, about = "Exact computations with truncated L∞ algebras")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model.
    Check(Common),
    /// Chevalley–Eilenberg cohomology with adjoint coefficients.
    Cohomology(Common),
    /// Cohomology table of the classifying-space model with the degree-0 action.
    Baut(Common),
    /// Harrison cohomology of a cdga base.
    Harrison(Common),
    /// Test a subspace for being an ideal and print the extension's Maurer–Cartan element.
    Extend(Common),
    /// Universal extension of the model.
    UniversalExt(Common),
    /// Deformations over a nilpotent base.
    Deform(Common),
    /// Induced brackets on CE cohomology.
    CupTable(Common),
}

#[derive(Args)]
struct Common {
    /// Model file (JSON).
    model: String,
    /// Degree window `lo..hi`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(i64, i64)>,
    #[arg(long)]
    weight_cap: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    degree_cap: Option<i64>,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<String>,
    /// Use derivations without constant term.
    #[arg(long)]
    truncated: bool,
    /// Deformation base: `eps`, `t<k>` for Q[t]/t^k, or a cdga model file.
    #[arg(long)]
    base: Option<String>,
    /// Comma-separated basis names spanning the candidate ideal.
    #[arg(long, value_delimiter = ',')]
    ideal: Option<Vec<String>>,
    /// Connectivity of the cover for `baut`.
    #[arg(long, allow_hyphen_values = true)]
    cover: Option<i64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Check(c) => (Command::Check, c),
        Cmd::Cohomology(c) => (Command::Cohomology, c),
        Cmd::Baut(c) => (Command::Baut, c),
        Cmd::Harrison(c) => (Command::Harrison, c),
        Cmd::Extend(c) => (Command::Extend, c),
        Cmd::UniversalExt(c) => (Command::UniversalExt, c),
        Cmd::Deform(c) => (Command::Deform, c),
        Cmd::CupTable(c) => (Command::CupTable, c),
    };
    let opts = Options {
        window: c.window,
        weight_cap: c.weight_cap,
        degree_cap: c.degree_cap,
        truncated: c.truncated,
        base: c.base,
        ideal: c.ideal,
        connectivity: c.cover,
    };
    let result = run(command, &c.model, &opts).and_then(|report| {
        if let Some(path) = &c.json {
            let body = serde_json::to_string_pretty(&report.json).expect("serializable report");
            std::fs::write(path, body + "\n").map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        }
        Ok(report)
    });
    match result {
        Ok(report) => {
            print!("{}", report.text);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
