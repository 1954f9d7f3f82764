fn main() {
    std::process::exit(pt_coupler::cli::run_cli(std::env::args_os()));
}
