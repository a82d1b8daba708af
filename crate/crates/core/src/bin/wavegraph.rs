fn main() {
    std::process::exit(wavegraph::cli::main_with_args(std::env::args_os()));
}
