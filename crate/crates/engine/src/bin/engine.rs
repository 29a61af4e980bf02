fn main() -> std::process::ExitCode {
    conceptlens_engine::cli::main()
}
