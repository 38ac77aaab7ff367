fn main() {
    std::process::exit(qrange::cli::run(std::env::args_os()));
}
