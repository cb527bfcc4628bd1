fn main() {
    std::process::exit(ragbench::cli::run_cli());
}
