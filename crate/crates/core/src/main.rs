use clap::Parser;

fn main() {
    std::process::exit(btlab::cli::main_with(btlab::cli::Cli::parse()));
}
