fn main() {
    std::process::exit(lightcone_cli::run(std::env::args_os()));
}
