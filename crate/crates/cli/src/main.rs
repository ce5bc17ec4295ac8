fn main() {
    std::process::exit(lambda_soliton_cli::run_cli(std::env::args_os()));
}
