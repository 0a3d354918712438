fn main() {
    std::process::exit(rmmd::cli::run(std::env::args_os()));
}
