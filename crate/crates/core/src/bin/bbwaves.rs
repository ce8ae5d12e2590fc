fn main() {
    std::process::exit(bbwaves::cli::main_with_args(std::env::args_os()));
}
