fn main() {
    std::process::exit(egp_cli::run(std::env::args_os()));
}
