fn main() {
    std::process::exit(qgtube::cli::run(std::env::args_os()));
}
