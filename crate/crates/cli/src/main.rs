use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use symwalk_cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help / --version
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
