fn main() {
    std::process::exit(robust_mdp::cli::run(std::env::args_os()));
}
