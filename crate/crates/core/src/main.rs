fn main() {
    std::process::exit(freqpol::cli::run());
}
