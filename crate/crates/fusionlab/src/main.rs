fn main() { std::process::exit(fusionlab::cli::run_from_env()); }
