use clap::Parser;

use gradgp_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = gradgp_cli::commands::run(&cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
