fn main() -> std::process::ExitCode {
    zetawb_cli::main_with(std::env::args_os())
}
