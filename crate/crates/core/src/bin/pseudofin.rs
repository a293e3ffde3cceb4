fn main() {
    std::process::exit(pseudofin::cli::main_with_args(std::env::args_os()));
}
