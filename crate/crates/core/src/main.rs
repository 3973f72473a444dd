fn main() {
    std::process::exit(hls_delta::cli::run(std::env::args_os()));
}
