fn main() {
    std::process::exit(annealfolio_cli::run(std::env::args_os()));
}
