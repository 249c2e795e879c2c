fn main() {
    std::process::exit(coherence_core::cli::main_with_args(std::env::args_os()));
}
