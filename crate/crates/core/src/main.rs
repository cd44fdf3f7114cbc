use std::process::ExitCode;

fn main() -> ExitCode {
    kglearn::cli::run()
}
