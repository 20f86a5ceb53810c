use std::process::ExitCode;

fn main() -> ExitCode {
    mac_training::cli::main_with_args(std::env::args_os())
}
