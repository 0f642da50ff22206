use std::process::ExitCode;

fn main() -> ExitCode {
    otkit_cli::main_with_args(std::env::args_os())
}
