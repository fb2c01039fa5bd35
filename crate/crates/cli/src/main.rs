fn main() {
    std::process::exit(bipartite_glass_cli::run(std::env::args_os()));
}
