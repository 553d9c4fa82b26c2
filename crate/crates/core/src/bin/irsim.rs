use std::process::ExitCode;

fn main() -> ExitCode {
    irsim::harness::cli::main()
}
