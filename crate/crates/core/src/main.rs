fn main() { std::process::exit(kmeans_landscape::cli::main()) }
