fn main() {
    std::process::exit(nhkrein::cli::main_with(std::env::args_os()));
}
