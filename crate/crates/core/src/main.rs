fn main() {
    std::process::exit(brdad::cli::main());
}
