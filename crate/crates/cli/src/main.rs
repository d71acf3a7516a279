use std::process::ExitCode;

fn main() -> ExitCode {
    let seed = std::env::var("QLDP_SEED").ok();
    let code = qldp_cli::run(std::env::args_os(), seed.as_deref(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
