fn main() {
    std::process::exit(rnfilter::cli::dispatch(std::env::args_os()));
}
