fn main() {
    std::process::exit(carnot_cli::run(std::env::args_os()));
}
