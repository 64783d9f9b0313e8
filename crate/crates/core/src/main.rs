fn main() {
    std::process::exit(ecfgof::harness::cli::run(std::env::args_os()));
}
