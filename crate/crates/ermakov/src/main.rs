fn main() {
    std::process::exit(ermakov::cli::main_with(std::env::args_os()));
}
