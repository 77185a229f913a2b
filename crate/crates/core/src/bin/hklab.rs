fn main() {
    std::process::exit(hklab::cli::run(std::env::args_os()));
}
