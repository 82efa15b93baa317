use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = phat_cli::run(
        std::env::args_os().map(|a| a.to_string_lossy().into_owned()),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code)
}
