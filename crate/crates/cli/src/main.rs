fn main() {
    std::process::exit(svbrdf_cli::run(std::env::args_os()));
}
