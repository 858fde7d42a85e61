fn main() {
    std::process::exit(nsk::cli::run(std::env::args_os()));
}
