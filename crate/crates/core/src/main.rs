fn main() {
    std::process::exit(concentra::cli::run(std::env::args_os()));
}
