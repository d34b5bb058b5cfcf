fn main() {
    std::process::exit(esfl::cli::main_with_args(std::env::args_os()));
}
