fn main() {
    std::process::exit(latent_aspects::cli::main_with_args(std::env::args_os()));
}
