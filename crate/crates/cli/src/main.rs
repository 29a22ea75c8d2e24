fn main() {
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or("warn,landing_core::retractions=error"),
    )
    .init();
    let code = landing_runner::cli::main_with_args(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
