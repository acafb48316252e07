fn main() {
    std::process::exit(hyperweyl::cli::main_with_args(std::env::args_os()));
}
