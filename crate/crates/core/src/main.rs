fn main() {
    std::process::exit(nibble_core::cli::main_with_args(std::env::args_os()));
}
