fn main() {
    std::process::exit(benjamin_lab::cli::run(std::env::args_os()));
}
