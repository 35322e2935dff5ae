fn main() {
    std::process::exit(jtr::cli::run(std::env::args_os()));
}
