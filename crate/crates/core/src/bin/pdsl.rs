fn main() {
    std::process::exit(pdsl::cli::main());
}
