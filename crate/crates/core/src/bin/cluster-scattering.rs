fn main() {
    std::process::exit(cluster_scattering::cli::main());
}
