fn main() {
    std::process::exit(frlogic::cli::entry());
}
