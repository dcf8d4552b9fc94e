fn main() -> std::process::ExitCode {
    sfde::cli::main_with_args(std::env::args_os())
}
