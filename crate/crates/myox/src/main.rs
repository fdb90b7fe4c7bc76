use std::process::ExitCode;

fn main() -> ExitCode {
    myox::cli::run()
}
