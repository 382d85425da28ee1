fn main() {
    std::process::exit(morevis_cli::run(std::env::args_os()));
}
