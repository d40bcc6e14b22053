fn main() {
    std::process::exit(locdb::cli::main_with_args(std::env::args_os()));
}
