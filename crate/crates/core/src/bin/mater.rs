fn main() {
    std::process::exit(mater::cli::main_with_args(std::env::args_os()));
}
