fn main() {
    std::process::exit(rotorlab::cli::main_entry());
}
