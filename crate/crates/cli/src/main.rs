fn main() {
    std::process::exit(mmseg_cli::run(std::env::args_os()));
}
