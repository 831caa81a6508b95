fn main() {
    std::process::exit(junta_cli::run(std::env::args_os()));
}
