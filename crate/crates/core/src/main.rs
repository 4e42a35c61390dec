fn main() {
    std::process::exit(heatinv::cli::run_from(std::env::args_os()));
}
