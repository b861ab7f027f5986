fn main() {
    std::process::exit(rulewalk::cli::main_with_args(std::env::args_os()));
}
