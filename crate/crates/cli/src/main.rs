use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(twin_isle_cli::execute(std::env::args_os()))
}
