fn main() {
    std::process::exit(ambinli::cli::run(std::env::args_os()));
}
