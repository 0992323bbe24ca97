fn main() {
    std::process::exit(paraproduct_harness::cli::main_with_args(std::env::args_os()));
}
