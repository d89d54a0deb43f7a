fn main() {
    std::process::exit(templatecut::cli::run(std::env::args_os()));
}
