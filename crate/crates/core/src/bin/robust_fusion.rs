use clap::Parser;
use robust_fusion::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
