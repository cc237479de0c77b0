use std::process::ExitCode;

fn main() -> ExitCode {
    lwm::cli::main()
}
