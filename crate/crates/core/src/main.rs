fn main() {
    std::process::exit(mmaudio::cli::run(std::env::args_os()));
}
