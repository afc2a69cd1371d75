use drgrade::pipeline::cli::{main_with, LOG_ENV};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info")).init();
    std::process::exit(main_with(std::env::args_os()));
}
