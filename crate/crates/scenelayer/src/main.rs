fn main() {
    std::process::exit(scenelayer::cli::run(std::env::args_os()));
}
