fn main() -> std::process::ExitCode {
    qseries::cli::main()
}
