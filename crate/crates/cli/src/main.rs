mod args;
mod commands;
mod config;
mod error;
mod figures;
mod sheet;
mod sweep;

use std::path::PathBuf;

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::{json, Map, Value};

use args::{Cli, Command, Format};
use error::CliError;
use sheet::{destination, write_to, Sheet};

/// The clap command with negative numbers and ranges such as -1..1 accepted as values.
fn command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(&n, |s| {
            s.args_override_self(true).mut_args(|a| if a.get_action().takes_values() { a.allow_hyphen_values(true) } else { a })
        });
    }
    cmd
}

/// Every argument of the subcommand as given or defaulted.
fn effective_config(m: &ArgMatches) -> Value {
    let mut out = Map::new();
    for id in m.ids() {
        let id = id.as_str();
        // group ids are the flattened struct names
        if matches!(id, "config" | "output") || id.starts_with(char::is_uppercase) {
            continue;
        }
        if let Ok(Some(raw)) = m.try_get_raw(id) {
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            out.insert(id.to_string(), json!(vals.join(",")));
        }
    }
    Value::Object(out)
}

fn emit(name: &str, s: Sheet, m: &ArgMatches, common: &args::Common) -> Result<(), CliError> {
    let s = s.meta("command", name).meta("oufet_version", oufet::VERSION).meta("config", effective_config(m));
    let dest = destination(common.output.as_deref(), name, common.format);
    write_to(dest.as_deref(), |w| s.write(common.format, w))
}

fn run(argv: Vec<std::ffi::OsString>) -> Result<(), CliError> {
    let cmd = command();
    let argv = config::expand(&cmd, argv)?;
    let matches = match cmd.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.to_string();
            return Err(CliError::Usage(msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match &cli.command {
        Command::MeanExit(a) => emit(name, commands::mean_exit(a, sub)?, sub, &a.common),
        Command::Spectrum(a) => emit(name, commands::spectrum(a, sub)?, sub, &a.common),
        Command::Survival(a) => emit(name, commands::survival_or_density(a, sub, false)?, sub, &a.common),
        Command::Density(a) => emit(name, commands::survival_or_density(a, sub, true)?, sub, &a.common),
        Command::Mgf(a) => emit(name, commands::mgf_cmd(a, sub)?, sub, &a.common),
        Command::Splitting(a) => emit(name, commands::splitting(a, sub)?, sub, &a.common),
        Command::SingleBarrier(a) => emit(name, commands::single_barrier(a, sub)?, sub, &a.common),
        Command::DoubleWell(a) => emit(name, commands::double_well(a, sub)?, sub, &a.common),
        Command::SqrtBoundary(a) => emit(name, commands::sqrt_boundary(a, sub)?, sub, &a.common),
        Command::Ctrw(a) => emit(name, commands::ctrw(a, sub)?, sub, &a.common),
        Command::Simulate(a) => {
            let fet = commands::simulate(a)?;
            let c = &a.common;
            let dest = destination(c.output.as_deref(), name, c.format);
            let config = effective_config(sub);
            write_to(dest.as_deref(), |w| match c.format {
                Format::Csv => {
                    write!(w, "# command: {name}\r\n# oufet_version: {}\r\n# config: {config}\r\n", oufet::VERSION)?;
                    fet.write_csv(w).map_err(std::io::Error::other)
                }
                Format::Json => {
                    let v = json!({ "metadata": { "command": name, "oufet_version": oufet::VERSION, "config": config }, "fet": fet });
                    writeln!(w, "{}", serde_json::to_string_pretty(&v)?)
                }
                Format::Pretty => {
                    let m = fet.mean_exit();
                    writeln!(w, "paths      {}", fet.n_paths())?;
                    writeln!(w, "censored   {}", fet.censored_count)?;
                    writeln!(w, "mean exit  {:.6e} +- {:.1e}{}", m.mean, m.std_error, if m.lower_bound { " (lower bound)" } else { "" })?;
                    for side in [oufet::mc_oracle::ExitSide::Lower, oufet::mc_oracle::ExitSide::Upper] {
                        let (f, se) = fet.side_fraction(side);
                        writeln!(w, "{:<10} {f:.4} +- {se:.4}", side.label())?;
                    }
                    Ok(())
                }
            })
        }
        Command::FigurePack(a) => {
            let dir = a
                .out_dir
                .clone()
                .or_else(|| std::env::var_os("OUFET_OUT_DIR").filter(|d| !d.is_empty()).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("figures"));
            let manifest = figures::figure_pack(&dir, a.seed, a.paths)?;
            eprintln!("wrote {} panels to {}", manifest["panels"].as_array().map_or(0, Vec::len), dir.display());
            Ok(())
        }
        Command::Specfun { op: args::SpecfunOp::Eval(a) } => {
            let v = commands::specfun_eval(a)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(std::env::args_os().collect()) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
