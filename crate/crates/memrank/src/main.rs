fn main() {
    std::process::exit(memrank::cli::cli_main(std::env::args_os()));
}
