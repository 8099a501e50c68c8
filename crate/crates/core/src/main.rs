fn main() {
    std::process::exit(locoh::cli::main_with_args(std::env::args_os()));
}
