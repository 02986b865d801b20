fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut out = std::io::stdout();
    std::process::exit(resm::cli::run(std::env::args_os(), &mut out));
}
