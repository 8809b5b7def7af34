fn main() {
    std::process::exit(actiontube::cli::run(std::env::args_os()));
}
