fn main() {
    std::process::exit(bladenv::run(std::env::args_os()));
}
