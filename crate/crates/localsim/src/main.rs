fn main() -> std::process::ExitCode {
    localsim::cli::main_with(std::env::args_os())
}
