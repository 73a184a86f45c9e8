use clap::Parser;
use qharm_cli::config::Cli;

fn main() {
    let cli = Cli::parse();
    let code = qharm_cli::run(&cli).unwrap_or_else(|e| {
        eprintln!("qharm: {e}");
        e.exit_code()
    });
    std::process::exit(code);
}
