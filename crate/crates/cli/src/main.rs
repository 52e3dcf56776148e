fn main() {
    std::process::exit(qpost_cli::run(std::env::args_os()));
}
