fn main() {
    std::process::exit(jde_core::cli::main_with_args(std::env::args_os()));
}
