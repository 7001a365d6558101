fn main() {
    std::process::exit(opdiag::cli::main());
}
