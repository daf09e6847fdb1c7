use clap::Parser;
use gaa_cli::app::{execute, Cli};
use gaa_cli::exit;

fn main() {
    // clap exits with status 2 on usage errors, which collides with the
    // infeasible-run code; report them as invalid input instead.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INVALID } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(execute(cli));
}
