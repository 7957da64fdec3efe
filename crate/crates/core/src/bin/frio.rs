fn main() {
    std::process::exit(frio::report::cli::run(std::env::args_os()));
}
