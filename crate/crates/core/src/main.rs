fn main() -> std::process::ExitCode {
    vstflow::cli::main()
}
