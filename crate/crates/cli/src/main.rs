fn main() {
    std::process::exit(hofstadter_cli::main_with_args(std::env::args_os()));
}
