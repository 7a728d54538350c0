fn main() {
    std::process::exit(pathsens::cli::run(std::env::args_os()));
}
