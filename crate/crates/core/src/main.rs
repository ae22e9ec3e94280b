fn main() {
    std::process::exit(flns::cli::run(std::env::args_os()));
}
