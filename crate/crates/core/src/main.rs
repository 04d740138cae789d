fn main() {
    std::process::exit(breatherlab::cli::main());
}
