//! `poroplate` executable: thin wrapper around the library command driver.

use clap::Parser;
use poroplate::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
