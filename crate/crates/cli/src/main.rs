use std::process::ExitCode;

fn main() -> ExitCode {
    let cfg = match galerkin_rk_cli::parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => e.exit(),
    };
    match galerkin_rk_cli::execute(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("galerkin-rk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
