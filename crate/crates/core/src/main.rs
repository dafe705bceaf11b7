fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(opaque_planner::cli::main())
}
