fn main() {
    std::process::exit(normgeo::cli::run(std::env::args_os()));
}
