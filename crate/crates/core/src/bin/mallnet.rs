use std::process::ExitCode;

fn main() -> ExitCode {
    mallnet::cli::main()
}
