fn main() { vorlab::cli::main() }
