fn main() {
    std::process::exit(evodist::cli::cli_main(std::env::args_os()));
}
