fn main() {
    std::process::exit(superquantum::cli::run_from_args(std::env::args_os()));
}
