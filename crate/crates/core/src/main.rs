fn main() {
    std::process::exit(dib::cli::main());
}
