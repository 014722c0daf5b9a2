fn main() {
    std::process::exit(biometric_blackbox::harness::main_with(std::env::args_os()));
}
