fn main() -> std::process::ExitCode {
    jobcorpus_review::cli::main()
}
