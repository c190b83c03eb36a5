fn main() {
    std::process::exit(biofilm_ibm::cli::run(std::env::args()));
}
