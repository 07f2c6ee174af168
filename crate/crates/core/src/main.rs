fn main() {
    std::process::exit(milnor::cli::main_with_args(std::env::args_os()));
}
