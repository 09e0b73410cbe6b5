fn main() -> std::process::ExitCode {
    prnu_sda::cli::main_with_args(std::env::args_os())
}
