fn main() {
    std::process::exit(coalition_core::cli::main_with_args(std::env::args_os()));
}
