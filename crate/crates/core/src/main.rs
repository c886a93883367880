use std::process::ExitCode;

fn main() -> ExitCode {
    mova::cli::run(std::env::args_os())
}
