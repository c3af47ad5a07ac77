fn main() {
    std::process::exit(mpr_cli::run(std::env::args_os()));
}
