fn main() -> std::process::ExitCode {
    dce_core::cli::main()
}
