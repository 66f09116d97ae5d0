fn main() {
    std::process::exit(sbp_cli::run_cli(std::env::args_os()));
}
