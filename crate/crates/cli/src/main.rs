use clap::Parser;

fn main() {
    let cli = rigidity_cli::Cli::parse();
    std::process::exit(rigidity_cli::run(&cli));
}
