fn main() {
    std::process::exit(semiwave_cli::run(std::env::args_os()));
}
