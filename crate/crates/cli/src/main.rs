use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match ensemble_interp_cli::run_from(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if ensemble_interp_cli::error_kind(&e) == "help" => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", ensemble_interp_cli::error_json(&e));
            let usage = ensemble_interp_cli::error_kind(&e) == "usage";
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
