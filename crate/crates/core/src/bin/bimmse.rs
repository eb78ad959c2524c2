fn main() {
    std::process::exit(bimmse::harness::cli::cli_main(std::env::args_os()));
}
