fn main() {
    std::process::exit(mlkfhe_cli::run(std::env::args()));
}
