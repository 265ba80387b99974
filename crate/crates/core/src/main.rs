use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = facalc::cli::run(std::env::args_os(), |p| std::fs::read_to_string(p));
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(out.code as u8)
}
