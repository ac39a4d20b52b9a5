fn main() {
    std::process::exit(promptlens::cli::main());
}
