use clap::Parser;

fn main() {
    let cli = mechfringe_cli::Cli::parse();
    if let Err(e) = mechfringe_cli::run(&cli) {
        eprintln!("mechfringe: {e}");
        std::process::exit(e.exit_code());
    }
}
