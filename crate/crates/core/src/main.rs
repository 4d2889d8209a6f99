fn main() {
    std::process::exit(hardy_lab::cli::run_cli(std::env::args_os()));
}
