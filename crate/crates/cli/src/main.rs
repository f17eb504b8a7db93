fn main() {
    std::process::exit(atsp_cli::cli::run(std::env::args_os()));
}
