fn main() {
    std::process::exit(attnground::cli::run(std::env::args_os()));
}
