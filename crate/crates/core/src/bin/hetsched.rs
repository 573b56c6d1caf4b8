fn main() {
    std::process::exit(hetsched::cli::main_with_args(std::env::args_os()));
}
