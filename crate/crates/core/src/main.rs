fn main() {
    std::process::exit(fidzero::cli::run(std::env::args_os()));
}
