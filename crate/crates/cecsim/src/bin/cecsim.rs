fn main() {
    std::process::exit(cecsim::cli::run(std::env::args_os()));
}
