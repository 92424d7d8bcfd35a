fn main() {
    std::process::exit(keydyn::cli::run_from(std::env::args_os()));
}
