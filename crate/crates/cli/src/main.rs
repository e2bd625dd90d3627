use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fell_cli::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let outcome = run(&cli);
    if outcome.code == EXIT_INPUT {
        eprint!("{}", outcome.output);
    } else {
        let mut stdout = std::io::stdout().lock();
        let _ = stdout.write_all(outcome.output.as_bytes());
    }
    ExitCode::from(outcome.code as u8)
}
