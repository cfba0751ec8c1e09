fn main() {
    std::process::exit(bgs::cli::dispatch(std::env::args_os()));
}
