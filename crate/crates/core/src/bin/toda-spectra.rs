fn main() {
    std::process::exit(toda_spectra::report::cli::main_with_args(std::env::args_os()));
}
