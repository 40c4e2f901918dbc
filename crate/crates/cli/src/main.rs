use clap::Parser;

fn main() {
    std::process::exit(metasens_cli::run(metasens_cli::Cli::parse()));
}
