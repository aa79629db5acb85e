fn main() {
    std::process::exit(hypdyn::cli::run(std::env::args_os()));
}
