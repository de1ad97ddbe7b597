fn main() {
    std::process::exit(inrq::cli::run_main());
}
