fn main() {
    std::process::exit(coopmec::cli::run(std::env::args_os()));
}
