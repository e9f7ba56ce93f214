use std::process::ExitCode;

fn main() -> ExitCode {
    dimer::cli::main_entry()
}
