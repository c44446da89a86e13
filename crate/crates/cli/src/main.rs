fn main() {
    std::process::exit(maxcon_cli::main_with_args(std::env::args_os()));
}
