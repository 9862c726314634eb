fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(normal_tori::cli::run(&args));
}
