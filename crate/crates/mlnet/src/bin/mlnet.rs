fn main() {
    std::process::exit(mlnet::io::cli::run(std::env::args_os()));
}
