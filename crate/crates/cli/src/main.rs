use clap::Parser;

fn main() {
    let cli = geex_cli::Cli::parse();
    if let Err(e) = geex_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
