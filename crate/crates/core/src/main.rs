fn main() {
    std::process::exit(shell_core::cli::run(std::env::args_os()));
}
