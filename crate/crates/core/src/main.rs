fn main() {
    std::process::exit(nnc_core::cli::main());
}
