use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    singulab::harness::init_thread_pool();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = singulab::harness::cli::run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
