use clap::Parser;

fn main() {
    std::process::exit(ebcm::cli::run(ebcm::cli::Cli::parse()));
}
