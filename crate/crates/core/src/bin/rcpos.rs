fn main() {
    std::process::exit(rcpos::cli::main_with_args(std::env::args_os()));
}
