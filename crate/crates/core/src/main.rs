fn main() {
    std::process::exit(seli_geometry::cli::run_from(std::env::args_os()));
}
