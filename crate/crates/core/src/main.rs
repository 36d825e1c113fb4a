fn main() {
    std::process::exit(varmiss::cli::run(std::env::args_os()));
}
