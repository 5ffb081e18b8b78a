use clap::Parser;
use plap_core::cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
