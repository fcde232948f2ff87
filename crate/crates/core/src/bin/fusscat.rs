fn main() {
    std::process::exit(fusscat::cli::run(std::env::args_os()));
}
