fn main() {
    std::process::exit(tempocomp::cli::run(std::env::args_os()));
}
