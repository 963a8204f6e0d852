fn main() {
    std::process::exit(wallforge_cli::main_with_args(std::env::args_os()));
}
