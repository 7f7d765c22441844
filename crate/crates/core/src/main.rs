fn main() {
    std::process::exit(exploding::cli::main());
}
