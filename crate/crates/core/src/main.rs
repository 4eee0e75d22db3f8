fn main() {
    std::process::exit(shapebias::cli::main_with_exit());
}
