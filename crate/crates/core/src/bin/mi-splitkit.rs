fn main() {
    std::process::exit(mi_splitkit::cli::main_with_args(std::env::args_os()));
}
