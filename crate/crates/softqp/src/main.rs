//! Binary entry point; all command logic lives in the [`cli`] module.

mod cli;

fn main() {
    std::process::exit(cli::run());
}
