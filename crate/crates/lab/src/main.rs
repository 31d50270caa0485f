fn main() -> std::process::ExitCode {
    fecsim::cli::main_with_args(std::env::args().collect())
}
