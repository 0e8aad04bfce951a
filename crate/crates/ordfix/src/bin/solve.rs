use clap::Parser;

use ordfix::cli::{self, Cli};

fn main() {
    let args = Cli::parse();
    match cli::execute(&args) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(cli::exit_code_for(&e));
        }
    }
}
