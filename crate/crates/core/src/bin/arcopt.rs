use std::process::ExitCode;

fn main() -> ExitCode {
    arcopt::cli::main()
}
