use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use sheafctl::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = run(&cli, &mut out, &mut io::stderr());
    if out.flush().is_err() && code == 0 {
        return ExitCode::from(EXIT_INPUT);
    }
    ExitCode::from(code)
}
