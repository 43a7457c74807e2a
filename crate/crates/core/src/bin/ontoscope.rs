fn main() {
    std::process::exit(ontoscope::cli::run(std::env::args_os()));
}
