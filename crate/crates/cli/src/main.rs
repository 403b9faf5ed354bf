fn main() {
    std::process::exit(xtlab_cli::dispatch(std::env::args_os()));
}
