use clap::Parser;
use qmoments_cli::{run, Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let reason = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&reason).trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::config(first));
            std::process::exit(2);
        }
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.kind.code());
        }
    }
}
