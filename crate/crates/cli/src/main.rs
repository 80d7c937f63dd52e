fn main() {
    std::process::exit(choquard_cli::cli_main(std::env::args_os()));
}
