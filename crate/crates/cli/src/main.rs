use clap::Parser;

fn main() {
    std::process::exit(fedrelay_cli::run(fedrelay_cli::Cli::parse()));
}
