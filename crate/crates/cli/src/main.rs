fn main() {
    std::process::exit(captree_cli::run(std::env::args_os()));
}
