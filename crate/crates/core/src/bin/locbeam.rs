fn main() {
    std::process::exit(locbeam::cli::main_with_args(std::env::args_os()));
}
