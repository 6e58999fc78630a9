fn main() {
    std::process::exit(fmpc::cli::main_with(std::env::args_os()));
}
