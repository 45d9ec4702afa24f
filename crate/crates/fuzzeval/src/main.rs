use std::process::ExitCode;

fn main() -> ExitCode {
    fuzzeval::cli::main_with_args(std::env::args_os())
}
