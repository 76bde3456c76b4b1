fn main() -> std::process::ExitCode {
    symsearch::cli::run(std::env::args_os())
}
