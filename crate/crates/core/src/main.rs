fn main() {
    let code = polyveil::cli::main_with_args(std::env::args_os());
    std::process::exit(code);
}
