fn main() {
    std::process::exit(ftsa::cli::run(std::env::args_os()));
}
