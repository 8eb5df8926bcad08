fn main() {
    std::process::exit(dctsent::cli::main());
}
