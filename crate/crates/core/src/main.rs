fn main() {
    std::process::exit(fmsched::cli::run(std::env::args_os()));
}
