fn main() {
    std::process::exit(enlarge_cli::main_with_args(std::env::args_os()));
}
