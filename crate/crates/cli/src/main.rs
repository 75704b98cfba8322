fn main() {
    std::process::exit(integratorlab_cli::run_subcommand(std::env::args_os()));
}
