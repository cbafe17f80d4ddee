fn main() {
    std::process::exit(eigenlab::cli::run(std::env::args()));
}
