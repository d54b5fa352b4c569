fn main() {
    std::process::exit(dispersion_lab::cli::run(std::env::args_os()));
}
