use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ddtf_cli::run(std::env::args_os()))
}
