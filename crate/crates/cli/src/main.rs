fn main() {
    std::process::exit(obsdesign_cli::main_with_args(std::env::args_os()));
}
