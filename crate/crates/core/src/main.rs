use std::io::Write;
use std::process::ExitCode;

use dimerlab::cli;

fn main() -> ExitCode {
    let bits = std::env::var(cli::FRONTIER_BITS_ENV).ok();
    let outcome = cli::run(std::env::args_os(), bits.as_deref());
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
