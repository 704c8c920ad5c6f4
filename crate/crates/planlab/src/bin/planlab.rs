use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout().lock();
    ExitCode::from(planlab::cli::run(&args, &mut stdout) as u8)
}
