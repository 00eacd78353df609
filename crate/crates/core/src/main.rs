use clap::Parser;

fn main() -> std::process::ExitCode {
    coinpulse::cli::run(&coinpulse::cli::Cli::parse())
}
