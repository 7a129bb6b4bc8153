fn main() {
    let code = hepacrop::cli::run(std::env::args_os());
    std::process::exit(code);
}
