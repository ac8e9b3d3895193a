fn main() {
    std::process::exit(varswap::cli::run(std::env::args_os()));
}
