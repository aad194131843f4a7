fn main() {
    std::process::exit(rgbforge::cli::run());
}
