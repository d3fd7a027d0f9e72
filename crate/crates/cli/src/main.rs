fn main() {
    std::process::exit(suu_cli::run(std::env::args_os()));
}
