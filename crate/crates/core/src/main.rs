fn main() {
    std::process::exit(krylov_funm::cli::run(std::env::args_os()));
}
