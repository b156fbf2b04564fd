fn main() -> std::process::ExitCode {
    bess_sizer::cli::main()
}
