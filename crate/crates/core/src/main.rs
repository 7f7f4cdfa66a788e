fn main() {
    std::process::exit(sodegeom::cli::main());
}
