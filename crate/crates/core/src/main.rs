fn main() {
    std::process::exit(soen_transmitter::cli::main());
}
