use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = sobolev_cli::execute(std::env::args_os());
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(outcome.stdout.as_bytes());
    let _ = out.flush();
    ExitCode::from(outcome.code as u8)
}
