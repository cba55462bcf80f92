fn main() {
    std::process::exit(floatbeam::cli::run_from(std::env::args_os()));
}
