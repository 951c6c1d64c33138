fn main() {
    std::process::exit(dce_core::cli::main_with_args(std::env::args_os()));
}
