fn main() {
    std::process::exit(beamguard::cli::main_with(std::env::args_os()));
}
