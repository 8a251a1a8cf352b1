fn main() {
    std::process::exit(hyperhol_cli::main_with_args(std::env::args_os()));
}
