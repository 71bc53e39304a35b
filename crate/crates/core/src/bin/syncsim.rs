fn main() {
    std::process::exit(syncsim::cli::main());
}
