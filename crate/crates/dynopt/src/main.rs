fn main() {
    std::process::exit(dynopt::run::run_cli(std::env::args_os()));
}
