use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(chflow_cli::run(std::env::args_os()))
}
