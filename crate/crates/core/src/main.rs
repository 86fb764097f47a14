fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(dilute_ising::cli::run(&args));
}
