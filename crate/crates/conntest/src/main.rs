fn main() -> std::process::ExitCode {
    conntest::cli::main()
}
