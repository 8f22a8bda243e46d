fn main() {
    std::process::exit(hideprint_bench::cli::run(std::env::args_os()));
}
