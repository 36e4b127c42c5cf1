fn main() {
    std::process::exit(crgrf::cli::main_with_args(std::env::args_os()));
}
