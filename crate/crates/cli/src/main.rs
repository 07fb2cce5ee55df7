fn main() {
    std::process::exit(spherecode_cli::execute(std::env::args_os()));
}
