fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(mucut::cli::main(&argv));
}
