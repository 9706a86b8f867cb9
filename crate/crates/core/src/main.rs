fn main() {
    std::process::exit(qprecast::cli::run(std::env::args_os()));
}
