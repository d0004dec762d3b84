fn main() {
    std::process::exit(dproj::xp::cli::run(std::env::args_os()));
}
