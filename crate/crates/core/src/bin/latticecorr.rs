fn main() {
    std::process::exit(latticecorr::cli::run(std::env::args_os()));
}
